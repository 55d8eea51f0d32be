"""Generalized Φ-functions φ(x, t) on a closed interval.

Five families are supported::

    Power(p, weight=1)          w(x) t^p
    Orlicz(terms)               x-independent sum of convex terms
    VariableExponent(p)         t^{p(x)}
    DoublePhase(q, a)           t + a(x) t^q
    ChenLevineRao(p, q)         t^{p(x)}/p(x) for t <= 1, linear growth beyond

All of them reduce the interval envelopes φ±_J(t) = sup/inf_{x in J} φ(x, t)
to exact range queries of their profiles, which is what the kernels consume.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import OutOfDomain, SpecError
from .profiles import Constant, Profile, profile_from_dict


class Side(str, enum.Enum):
    PLUS = "plus"
    MINUS = "minus"

    @classmethod
    def parse(cls, side):
        if isinstance(side, Side):
            return side
        if isinstance(side, bool):
            return cls.PLUS if side else cls.MINUS
        s = str(side).strip().lower()
        if s in ("plus", "+", "sup", "upper"):
            return cls.PLUS
        if s in ("minus", "-", "inf", "lower"):
            return cls.MINUS
        raise ValueError(f"unknown envelope side {side!r}")


class PhiFamily:
    """Common machinery; subclasses fill in ``kind``, ``prm`` and the profiles."""

    kind: int
    domain: tuple
    convex = True
    x_independent = False
    #: constant L of the almost-increasing property of φ(x, t)/t
    inc_constant = 1.0

    def _profiles(self):
        return None, None

    @property
    def profiles(self):
        return [p for p in self._profiles() if p is not None]

    @property
    def knots(self):
        """Profile breakpoints inside the domain (where φ may lose smoothness in x)."""
        a, b = self.domain
        pts = [k for p in self.profiles for k in np.atleast_1d(p.knots)]
        return np.array(sorted({float(k) for k in pts if a < k < b}))

    def _check_domain(self, x):
        a, b = self.domain
        x = np.asarray(x, dtype=float)
        if np.any((x < a) | (x > b)) or np.any(np.isnan(x)):
            raise OutOfDomain(f"point outside domain [{a}, {b}]")
        return x

    def profile_values(self, x):
        p1, p2 = self._profiles()
        x = np.asarray(x, dtype=float)
        v1 = np.zeros_like(x) if p1 is None else np.asarray(p1(x), dtype=float) * np.ones_like(x)
        v2 = np.zeros_like(x) if p2 is None else np.asarray(p2(x), dtype=float) * np.ones_like(x)
        return v1, v2

    def cell_ranges(self, l, r):
        """Exact profile ranges (lo1, hi1, lo2, hi2) over each ``[l_i, r_i]``."""
        l = np.asarray(l, dtype=float)
        r = np.asarray(r, dtype=float)
        out = []
        for p in self._profiles():
            if p is None:
                z = np.zeros(np.broadcast(l, r).shape)
                out.extend([z, z])
            else:
                lo, hi = p.range(l, r)
                out.extend([np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)])
        return tuple(out)

    def eval(self, x, t):
        """φ(x, t); vectorized over broadcastable ``x`` and ``t``."""
        x = self._check_domain(x)
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("t must be non-negative")
        x, t = np.broadcast_arrays(x, t)
        v1, v2 = self.profile_values(x)
        out = kernels.phi_point_np(self.kind, t, v1, v2, self.prm)
        return float(out) if out.ndim == 0 else out

    def derivative(self, x, t):
        """Right derivative ∂φ/∂t."""
        x = self._check_domain(x)
        x, t = np.broadcast_arrays(x, np.asarray(t, dtype=float))
        v1, v2 = self.profile_values(x)
        out = kernels.dphi_point_np(self.kind, t, v1, v2, self.prm)
        return float(out) if np.ndim(out) == 0 else out

    def envelope(self, J, t, side=Side.PLUS):
        """φ+_J(t) (sup over x in J) or φ-_J(t) (inf), exactly."""
        l, r = float(J[0]), float(J[1])
        if not l < r:
            raise ValueError("envelope interval must be non-degenerate")
        self._check_domain([l, r])
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("t must be non-negative")
        side = Side.parse(side)
        lo1, hi1, lo2, hi2 = self.cell_ranges(np.array([l]), np.array([r]))
        tt = np.atleast_1d(t).ravel()
        k = tt.size
        out = kernels.env_many(self.kind, tt, np.repeat(lo1, k), np.repeat(hi1, k),
                               np.repeat(lo2, k), np.repeat(hi2, k), self.prm, side is Side.PLUS)
        return float(out[0]) if t.ndim == 0 else out.reshape(t.shape)

    def envelope_cells(self, l, r, t, side=Side.PLUS):
        """Envelopes for arrays of intervals ``[l_i, r_i]`` and arguments ``t_i``."""
        side = Side.parse(side)
        lo1, hi1, lo2, hi2 = self.cell_ranges(l, r)
        return kernels.env_many(self.kind, t, lo1, hi1, lo2, hi2, self.prm, side is Side.PLUS)

    def prime_infinity(self, x):
        """φ'_∞(x) = lim_{t→∞} φ(x, t)/t."""
        raise NotImplementedError

    def solve_t(self, x, level):
        """Smallest t with φ(x, t) >= level (bisection; φ non-decreasing in t)."""
        x = float(x)
        if level <= 0:
            return 0.0
        hi = 1.0
        while self.eval(x, hi) < level:
            hi *= 2.0
            if hi > 1e300:
                return math.inf
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.eval(x, mid) < level:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * hi:
                break
        return hi

    def to_dict(self):
        raise NotImplementedError


def _domain(domain):
    a, b = (float(v) for v in domain)
    if not a < b:
        raise SpecError("domain must satisfy a < b", "domain")
    return (a, b)


class Power(PhiFamily):
    """φ(x, t) = w(x) t^p, p >= 1. The weight defaults to 1 (x-independent)."""

    kind = kernels.POWER

    def __init__(self, p: float, weight: Optional[Profile] = None, domain=(0.0, 1.0)):
        if not p >= 1.0 or not math.isfinite(p):
            raise SpecError("Power exponent must be a finite number >= 1", "p")
        self.p = float(p)
        self.weight = Constant(1.0) if weight is None else weight
        self.domain = _domain(domain)
        lo, _ = self.weight.range(self.domain[0], self.domain[1])
        if float(lo) < 0:
            raise SpecError("weight must be non-negative", "weight")
        self.x_independent = self.weight.is_constant
        self.prm = np.array([self.p, 0.0, 0.0])

    def _profiles(self):
        return self.weight, None

    def prime_infinity(self, x):
        x = self._check_domain(x)
        w = np.asarray(self.weight(x), dtype=float)
        out = np.where(w == 0.0, 0.0, w if self.p == 1.0 else np.inf)
        return float(out) if out.ndim == 0 else out

    def to_dict(self):
        d = {"kind": "power", "p": self.p, "domain": list(self.domain)}
        if not (isinstance(self.weight, Constant) and self.weight.value == 1.0):
            d["weight"] = self.weight.to_dict()
        return d

    def __repr__(self):
        return f"Power(p={self.p}, weight={self.weight!r}, domain={self.domain})"


@dataclass(frozen=True)
class OrliczTerm:
    """One convex term of an Orlicz function.

    ``power``: coef * t^param (param >= 1); ``hinge``: coef * max(t - param, 0);
    ``soft_linear``: coef * t^2 / (param + t), which grows like coef * t.
    """
    type: str
    coef: float
    param: float

    _CODES = {"power": kernels.TERM_POWER, "hinge": kernels.TERM_HINGE,
              "soft_linear": kernels.TERM_SOFT}

    def __post_init__(self):
        if self.type not in self._CODES:
            raise SpecError(f"unknown Orlicz term {self.type!r}", "terms.type")
        if not self.coef >= 0:
            raise SpecError("term coefficients must be non-negative", "terms.coef")
        if self.type == "power" and not self.param >= 1:
            raise SpecError("power terms need exponent >= 1", "terms.exp")
        if self.type == "hinge" and not self.param >= 0:
            raise SpecError("hinge location must be >= 0", "terms.at")
        if self.type == "soft_linear" and not self.param > 0:
            raise SpecError("soft_linear scale must be > 0", "terms.scale")

    @property
    def slope_at_infinity(self):
        if self.coef == 0:
            return 0.0
        if self.type == "power" and self.param > 1:
            return math.inf
        return self.coef

    def to_dict(self):
        key = {"power": "exp", "hinge": "at", "soft_linear": "scale"}[self.type]
        return {"type": self.type, "coef": self.coef, key: self.param}

    @classmethod
    def from_dict(cls, d, where="terms"):
        typ = d.get("type")
        key = {"power": "exp", "hinge": "at", "soft_linear": "scale"}.get(typ)
        if key is None:
            raise SpecError(f"unknown Orlicz term {typ!r}", f"{where}.type")
        try:
            return cls(typ, float(d.get("coef", 1.0)), float(d[key]))
        except KeyError:
            raise SpecError(f"missing field {key!r}", where) from None


class Orlicz(PhiFamily):
    """x-independent convex φ(t) = Σ terms; e.g. t + t²/(1+t) has slope 2 at infinity."""

    kind = kernels.ORLICZ
    x_independent = True

    def __init__(self, terms: Sequence[OrliczTerm], domain=(0.0, 1.0)):
        terms = tuple(terms)
        if not terms or all(t.coef == 0 for t in terms):
            raise SpecError("an Orlicz function needs at least one term with positive coefficient",
                            "terms")
        self.terms = terms
        self.domain = _domain(domain)
        codes = [OrliczTerm._CODES[t.type] for t in terms]
        flat = [v for c, t in zip(codes, terms) for v in (c, t.coef, t.param)]
        self.prm = np.array([0.0, 0.0, float(len(terms))] + flat)

    def prime_infinity(self, x):
        x = self._check_domain(x)
        k = math.fsum(t.slope_at_infinity for t in self.terms if math.isfinite(t.slope_at_infinity))
        if any(math.isinf(t.slope_at_infinity) for t in self.terms):
            k = math.inf
        return k if np.ndim(x) == 0 else np.full(np.shape(x), k)

    def to_dict(self):
        return {"kind": "orlicz", "terms": [t.to_dict() for t in self.terms],
                "domain": list(self.domain)}

    def __repr__(self):
        return f"Orlicz(terms={list(self.terms)!r}, domain={self.domain})"


class VariableExponent(PhiFamily):
    """φ(x, t) = t^{p(x)} with 1 <= p(x) < ∞."""

    kind = kernels.VAREXP

    def __init__(self, p: Profile, domain=(0.0, 1.0)):
        self.p = p if isinstance(p, Profile) else Constant(float(p))
        self.domain = _domain(domain)
        lo, hi = self.p.range(*self.domain)
        if float(lo) < 1.0:
            raise SpecError("variable exponent must satisfy p(x) >= 1", "p")
        self.x_independent = self.p.is_constant
        self.prm = np.array([0.0, 0.0, 0.0])

    def _profiles(self):
        return self.p, None

    def prime_infinity(self, x):
        x = self._check_domain(x)
        out = np.where(np.asarray(self.p(x)) == 1.0, 1.0, np.inf)
        return float(out) if out.ndim == 0 else out

    def to_dict(self):
        return {"kind": "variable_exponent", "p": self.p.to_dict(), "domain": list(self.domain)}

    def __repr__(self):
        return f"VariableExponent(p={self.p!r}, domain={self.domain})"


class DoublePhase(PhiFamily):
    """φ(x, t) = t + a(x) t^q with q > 1 and a >= 0."""

    kind = kernels.DOUBLE_PHASE

    def __init__(self, q: float, a: Profile, domain=(0.0, 1.0)):
        if not q > 1.0 or not math.isfinite(q):
            raise SpecError("double phase exponent must satisfy 1 < q < inf", "q")
        self.q = float(q)
        self.a = a if isinstance(a, Profile) else Constant(float(a))
        self.domain = _domain(domain)
        lo, _ = self.a.range(*self.domain)
        if float(lo) < 0:
            raise SpecError("coefficient a(x) must be non-negative", "a")
        self.x_independent = self.a.is_constant
        self.prm = np.array([self.q, 0.0, 0.0])

    def _profiles(self):
        return self.a, None

    def prime_infinity(self, x):
        x = self._check_domain(x)
        out = np.where(np.asarray(self.a(x)) == 0.0, 1.0, np.inf)
        return float(out) if out.ndim == 0 else out

    def to_dict(self):
        return {"kind": "double_phase", "q": self.q, "a": self.a.to_dict(),
                "domain": list(self.domain)}

    def __repr__(self):
        return f"DoublePhase(q={self.q}, a={self.a!r}, domain={self.domain})"


class ChenLevineRao(PhiFamily):
    """φ(x, t) = t^{p(x)}/p(x) for t <= 1 and linear growth for t > 1.

    As printed, the linear branch is t - 1 - 1/q(x); it does not meet the
    first branch at t = 1 (and is negative just above it), so the result is
    not a Φ-function. With ``continuity_corrected=True`` the branch becomes
    t - 1 + 1/p(x), which is C¹ and convex.
    """

    kind = kernels.CLR

    def __init__(self, p: Profile, q: Optional[Profile] = None, domain=(0.0, 1.0),
                 continuity_corrected: bool = True):
        self.p = p if isinstance(p, Profile) else Constant(float(p))
        self.q = Constant(2.0) if q is None else (q if isinstance(q, Profile) else Constant(float(q)))
        self.domain = _domain(domain)
        self.continuity_corrected = bool(continuity_corrected)
        lo, _ = self.p.range(*self.domain)
        if float(lo) < 1.0:
            raise SpecError("exponent p(x) must be >= 1", "p")
        self.convex = self.continuity_corrected
        self.inc_constant = 1.0 if self.continuity_corrected else math.nan
        self.x_independent = self.p.is_constant and self.q.is_constant
        self.prm = np.array([0.0, 1.0 if self.continuity_corrected else 0.0, 0.0])

    def _profiles(self):
        return self.p, self.q

    def prime_infinity(self, x):
        x = self._check_domain(x)
        return 1.0 if np.ndim(x) == 0 else np.ones(np.shape(x))

    def to_dict(self):
        return {"kind": "chen_levine_rao", "p": self.p.to_dict(), "q": self.q.to_dict(),
                "continuity_corrected": self.continuity_corrected, "domain": list(self.domain)}

    def __repr__(self):
        return (f"ChenLevineRao(p={self.p!r}, q={self.q!r}, "
                f"continuity_corrected={self.continuity_corrected}, domain={self.domain})")


def phi_from_dict(d) -> PhiFamily:
    """Build a family from its JSON object (schema in the README)."""
    if not isinstance(d, dict):
        raise SpecError("expected a JSON object", "phi")
    kind = d.get("kind")
    domain = d.get("domain", [0.0, 1.0])
    if not (isinstance(domain, (list, tuple)) and len(domain) == 2):
        raise SpecError("domain must be a two-element array", "domain")
    try:
        if kind == "power":
            w = d.get("weight")
            return Power(float(d["p"]), None if w is None else profile_from_dict(w, "weight"), domain)
        if kind == "orlicz":
            terms = d.get("terms")
            if not isinstance(terms, list):
                raise SpecError("terms must be an array", "terms")
            return Orlicz([OrliczTerm.from_dict(t, f"terms[{i}]") for i, t in enumerate(terms)], domain)
        if kind == "variable_exponent":
            return VariableExponent(profile_from_dict(d["p"], "p"), domain)
        if kind == "double_phase":
            return DoublePhase(float(d["q"]), profile_from_dict(d["a"], "a"), domain)
        if kind == "chen_levine_rao":
            q = d.get("q")
            return ChenLevineRao(profile_from_dict(d["p"], "p"),
                                 None if q is None else profile_from_dict(q, "q"),
                                 domain, bool(d.get("continuity_corrected", True)))
    except KeyError as exc:
        raise SpecError(f"missing field {exc.args[0]!r}", "phi") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(str(exc), "phi") from None
    raise SpecError(f"unknown kind {kind!r}", "kind")
