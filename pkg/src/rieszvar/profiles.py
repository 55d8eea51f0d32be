"""Exponent and coefficient profiles p(x), a(x), w(x) with exact range queries.

A profile answers two questions: its value at points, and its exact minimum
and maximum over closed intervals ``[l, r]``. Constant and piecewise-linear
profiles answer range queries in closed form. Analytic profiles must declare
either the breakpoints of their monotone segments (exact) or a modulus of
continuity (certified sampling).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NoModulus, SpecError, Unsupported

RANGE_RTOL = 1e-9


class _SparseTable:
    """O(1) range-min/max queries over a fixed array (idempotent reductions)."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        self.n = len(values)
        self.mins = [values]
        self.maxs = [values]
        width = 1
        while 2 * width <= self.n:
            lo, hi = self.mins[-1], self.maxs[-1]
            self.mins.append(np.minimum(lo[:-width], lo[width:]))
            self.maxs.append(np.maximum(hi[:-width], hi[width:]))
            width *= 2

    def query(self, i0, i1):
        """min/max over inclusive index ranges; empty ranges give (+inf, -inf)."""
        shape = np.shape(i0)
        i0 = np.atleast_1d(np.asarray(i0, dtype=np.int64))
        i1 = np.atleast_1d(np.asarray(i1, dtype=np.int64))
        lo = np.full(i0.shape, np.inf)
        hi = np.full(i0.shape, -np.inf)
        ok = i1 >= i0
        if self.n == 0 or not np.any(ok):
            return lo.reshape(shape), hi.reshape(shape)
        a, b = i0[ok], i1[ok]
        k = np.floor(np.log2(b - a + 1)).astype(np.int64)
        for level in np.unique(k):
            sel = k == level
            w = 1 << int(level)
            aa, bb = a[sel], b[sel] - w + 1
            idx = np.flatnonzero(ok)[sel]
            lo[idx] = np.minimum(self.mins[level][aa], self.mins[level][bb])
            hi[idx] = np.maximum(self.maxs[level][aa], self.maxs[level][bb])
        return lo.reshape(shape), hi.reshape(shape)


class Profile:
    """Base class. Subclasses implement ``__call__``, ``range`` and ``to_dict``."""

    #: abscissae where the profile may change monotonicity or slope
    knots: np.ndarray = np.empty(0)

    def __call__(self, x):
        raise NotImplementedError

    def range(self, l, r):
        """Exact ``(min, max)`` of the profile over each ``[l_i, r_i]``."""
        raise NotImplementedError

    def modulus(self, r):
        """A modulus of continuity ω(r), or None when unknown."""
        return None

    def to_dict(self):
        raise NotImplementedError

    @property
    def is_constant(self):
        return False

    @property
    def lipschitz(self):
        """Lipschitz constant when known in closed form, else None."""
        return None


@dataclass(frozen=True)
class Constant(Profile):
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise Unsupported("profiles taking the value +inf are not supported")

    def __call__(self, x):
        return np.full(np.shape(x), float(self.value)) if np.ndim(x) else float(self.value)

    def range(self, l, r):
        shape = np.broadcast(np.asarray(l), np.asarray(r)).shape
        v = np.full(shape, float(self.value))
        return v, v.copy()

    def modulus(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def to_dict(self):
        return {"type": "constant", "value": float(self.value)}

    @property
    def is_constant(self):
        return True

    @property
    def lipschitz(self):
        return 0.0


class PiecewiseLinear(Profile):
    """Continuous piecewise-linear profile; constant extension outside the knots."""

    def __init__(self, knots: Sequence[float], values: Sequence[float]):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape or len(knots) < 1:
            raise SpecError("knots and values must be equal-length 1D arrays", "profile")
        if np.any(np.diff(knots) <= 0):
            raise SpecError("knots must be strictly increasing", "profile.knots")
        if not np.all(np.isfinite(values)):
            raise Unsupported("profiles taking the value +inf are not supported")
        self.knots = knots
        self.values = values
        self._table = _SparseTable(values)

    def __call__(self, x):
        out = np.interp(x, self.knots, self.values)
        return float(out) if np.ndim(out) == 0 else out

    def range(self, l, r):
        l = np.asarray(l, dtype=float)
        r = np.asarray(r, dtype=float)
        l, r = np.broadcast_arrays(l, r)
        vl = np.interp(l, self.knots, self.values)
        vr = np.interp(r, self.knots, self.values)
        i0 = np.searchsorted(self.knots, l, side="right")
        i1 = np.searchsorted(self.knots, r, side="left") - 1
        klo, khi = self._table.query(i0, i1)
        return np.minimum(np.minimum(vl, vr), klo), np.maximum(np.maximum(vl, vr), khi)

    @property
    def lipschitz(self):
        if len(self.knots) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.values) / np.diff(self.knots))))

    def modulus(self, r):
        return self.lipschitz * np.asarray(r, dtype=float)

    @property
    def is_constant(self):
        return bool(np.all(self.values == self.values[0]))

    def to_dict(self):
        return {"type": "piecewise_linear", "knots": self.knots.tolist(),
                "values": self.values.tolist()}

    def __eq__(self, other):
        return (isinstance(other, PiecewiseLinear) and np.array_equal(self.knots, other.knots)
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.knots.tobytes(), self.values.tobytes()))

    def __repr__(self):
        return f"PiecewiseLinear(knots={self.knots.tolist()}, values={self.values.tolist()})"


class Analytic(Profile):
    """Profile given by a vectorized callable.

    ``segments`` lists interior breakpoints between which the callable is
    monotone; with it, ranges are exact. Otherwise ``modulus`` (a vectorized
    ω(r)) is required and ranges are certified by refined sampling.
    ``name``/``params`` let registered analytic profiles round-trip through
    JSON (see :data:`ANALYTIC_REGISTRY`).
    """

    def __init__(self, func: Callable, segments: Optional[Sequence[float]] = None,
                 modulus: Optional[Callable] = None, name: str = None,
                 params: dict = None, lipschitz: float = None):
        self.func = func
        self.segments = None if segments is None else np.asarray(sorted(segments), dtype=float)
        self._modulus = modulus
        self.name = name
        self.params = dict(params or {})
        self._lipschitz = lipschitz
        if self.segments is not None:
            self.knots = self.segments
            vals = np.asarray(func(self.segments), dtype=float) if len(self.segments) else np.empty(0)
            self._seg_values = vals
            self._table = _SparseTable(vals)

    def __call__(self, x):
        out = self.func(np.asarray(x, dtype=float))
        out = np.asarray(out, dtype=float)
        if np.any(np.isposinf(out)):
            raise Unsupported("profiles taking the value +inf are not supported")
        return float(out) if out.ndim == 0 else out

    def modulus(self, r):
        if self._modulus is None:
            return None
        return np.asarray(self._modulus(np.asarray(r, dtype=float)), dtype=float)

    @property
    def lipschitz(self):
        return self._lipschitz

    def range(self, l, r):
        l = np.asarray(l, dtype=float)
        r = np.asarray(r, dtype=float)
        l, r = np.broadcast_arrays(l, r)
        if self.segments is not None:
            vl = np.asarray(self(l), dtype=float)
            vr = np.asarray(self(r), dtype=float)
            i0 = np.searchsorted(self.segments, l, side="right")
            i1 = np.searchsorted(self.segments, r, side="left") - 1
            klo, khi = self._table.query(i0, i1)
            return np.minimum(np.minimum(vl, vr), klo), np.maximum(np.maximum(vl, vr), khi)
        if self._modulus is None:
            raise NoModulus("analytic profile declares neither monotone segments nor a modulus")
        return self._sampled_range(l, r)

    def _sampled_range(self, l, r, max_samples=1 << 16):
        # bracket: true sup lies in [sampled max, sampled max + ω(half spacing)]
        flat_l, flat_r = l.ravel(), r.ravel()
        lo = np.empty(flat_l.shape)
        hi = np.empty(flat_l.shape)
        todo = np.arange(flat_l.size)
        m = 9
        while todo.size:
            s = np.linspace(0.0, 1.0, m)
            pts = flat_l[todo, None] + (flat_r - flat_l)[todo, None] * s[None, :]
            vals = np.asarray(self.func(pts), dtype=float)
            vmin, vmax = vals.min(axis=1), vals.max(axis=1)
            width = self.modulus((flat_r - flat_l)[todo] / (2.0 * (m - 1)))
            done = (width <= RANGE_RTOL * (1.0 + np.maximum(np.abs(vmin), np.abs(vmax)))) | (m >= max_samples)
            lo[todo[done]] = vmin[done]
            hi[todo[done]] = vmax[done]
            todo = todo[~done]
            m = 2 * m - 1
        return lo.reshape(l.shape), hi.reshape(l.shape)

    def to_dict(self):
        if self.name is None:
            raise SpecError("anonymous analytic profiles cannot be serialized", "profile")
        return {"type": "analytic", "name": self.name, "params": dict(self.params)}

    def __repr__(self):
        return f"Analytic(name={self.name!r}, params={self.params!r})"


# ---------------------------------------------------------------------------
# registered analytic profiles
# ---------------------------------------------------------------------------

def inverse_log(center=0.0, scale=1.0, base=1.0):
    """p(x) = base + scale / log(1/|x - center|), with p(center) = base.

    Monotone on either side of ``center``; defined for |x - center| < 1.
    ``inverse_log()`` on [0, 1/2] is the exponent that separates the upper and
    lower limsup variations of a unit jump at 0.
    """
    def func(x):
        d = np.abs(np.asarray(x, dtype=float) - center)
        with np.errstate(divide="ignore"):
            lg = -np.log(d)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(d == 0.0, base, base + scale / lg)
        if np.any(d >= 1.0):
            raise Unsupported("inverse_log profile is only defined for |x - center| < 1")
        return out

    return Analytic(func, segments=[center], name="inverse_log",
                    params={"center": center, "scale": scale, "base": base})


def holder_power(center=0.0, coef=1.0, alpha=0.5, offset=0.0):
    """a(x) = offset + coef * |x - center|**alpha (α-Hölder, monotone on each side)."""
    if not 0.0 < alpha <= 1.0:
        raise SpecError("Hölder exponent must lie in (0, 1]", "profile.params.alpha")

    def func(x):
        return offset + coef * np.abs(np.asarray(x, dtype=float) - center) ** alpha

    def omega(r):
        return coef * np.asarray(r, dtype=float) ** alpha

    return Analytic(func, segments=[center], modulus=omega, name="holder_power",
                    params={"center": center, "coef": coef, "alpha": alpha, "offset": offset})


def smooth_bump(lo=0.4, hi=0.6, width=0.05, inside=1.0, outside=2.0):
    """C¹ blend equal to ``inside`` on [lo, hi] and ``outside`` beyond distance ``width``."""
    def func(x):
        x = np.asarray(x, dtype=float)
        d = np.maximum(np.maximum(lo - x, x - hi), 0.0)
        s = np.clip(d / width, 0.0, 1.0)
        blend = s * s * (3.0 - 2.0 * s)
        return inside + (outside - inside) * blend

    lip = 1.5 * abs(outside - inside) / width
    return Analytic(func, segments=[lo - width, lo, hi, hi + width],
                    modulus=lambda r: lip * np.asarray(r), name="smooth_bump",
                    params={"lo": lo, "hi": hi, "width": width, "inside": inside, "outside": outside},
                    lipschitz=lip)


ANALYTIC_REGISTRY = {
    "inverse_log": inverse_log,
    "holder_power": holder_power,
    "smooth_bump": smooth_bump,
}


def profile_from_dict(d, where="profile"):
    if isinstance(d, (int, float)) and not isinstance(d, bool):
        return Constant(float(d))
    if not isinstance(d, dict):
        raise SpecError("expected an object or a number", where)
    kind = d.get("type")
    try:
        if kind == "constant":
            return Constant(float(d["value"]))
        if kind == "piecewise_linear":
            return PiecewiseLinear(d["knots"], d["values"])
        if kind == "analytic":
            name = d.get("name")
            if name not in ANALYTIC_REGISTRY:
                raise SpecError(f"unknown analytic profile {name!r}; known: {sorted(ANALYTIC_REGISTRY)}",
                                f"{where}.name")
            return ANALYTIC_REGISTRY[name](**d.get("params", {}))
    except KeyError as exc:
        raise SpecError(f"missing field {exc.args[0]!r}", where) from None
    except TypeError as exc:
        raise SpecError(str(exc), where) from None
    raise SpecError(f"unknown profile type {kind!r}", f"{where}.type")
