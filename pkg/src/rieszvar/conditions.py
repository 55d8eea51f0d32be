"""Structural conditions on Φ-functions and the small-ball Jensen gap.

Verdicts are ``Holds`` only when they follow from closed-form structure
(constant or piecewise-linear profiles, exponent bounds). Everything else is
checked on deterministic log-spaced samples and reported as ``Inconclusive``
(no violation within budget) or ``Fails`` with a witness that re-evaluates
as a violation through :func:`witness_violates`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import PreconditionViolated, SpecError
from .phi import ChenLevineRao, DoublePhase, PhiFamily, Power, Side, VariableExponent
from .profiles import Analytic, Constant, PiecewiseLinear, Profile

HOLDS = "Holds"
FAILS = "Fails"
INCONCLUSIVE = "Inconclusive"

CONDITIONS = ("A0", "A1", "VA1", "aInc", "aDec", "strongLogHolder", "alphaHolder")

#: smallest β tried by the (A0)/(A1) searches
BETA_FLOOR = 2.0 ** -40
#: almost-monotonicity constants above this count as failures
L_TESTED = 1e3
#: Hölder quotients above this count as failures
HOLDER_TESTED = 1e3


@dataclass
class ConditionReport:
    condition: str
    verdict: str
    witness: Optional[tuple] = None
    constants: dict = field(default_factory=dict)
    method: str = "analytic"
    detail: str = ""

    def to_dict(self):
        return {"condition": self.condition, "verdict": self.verdict,
                "witness": None if self.witness is None else list(self.witness),
                "constants": self.constants, "method": self.method, "detail": self.detail}

    @classmethod
    def from_dict(cls, d):
        w = d.get("witness")
        return cls(d["condition"], d["verdict"], None if w is None else tuple(w),
                   dict(d.get("constants", {})), d.get("method", "analytic"), d.get("detail", ""))


def _structured(profile: Optional[Profile]):
    return profile is None or isinstance(profile, (Constant, PiecewiseLinear)) or (
        isinstance(profile, Analytic) and profile.lipschitz is not None)


def _main_profile(phi: PhiFamily):
    """The x-dependent ingredient whose regularity decides the continuity conditions."""
    if isinstance(phi, (VariableExponent, ChenLevineRao)):
        return phi.p
    if isinstance(phi, DoublePhase):
        return phi.a
    if isinstance(phi, Power):
        return phi.weight
    return None


def _profile_range(profile, phi):
    lo, hi = profile.range(*phi.domain)
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _radii(phi, n=28):
    a, b = phi.domain
    return (b - a) * 2.0 ** -np.arange(1, n + 1)


def _centers(phi, budget):
    a, b = phi.domain
    n = max(8, min(64, budget // 50))
    pts = [np.linspace(a, b, n), phi.knots, [a, b]]
    for p in phi.profiles:
        seg = getattr(p, "segments", None)
        if seg is not None:
            pts.append(seg)
    pts = np.unique(np.concatenate([np.asarray(p, dtype=float) for p in pts]))
    return pts[(pts >= a) & (pts <= b)]


def _window_points(phi, c, r):
    """Sample points of B = (c - r, c + r) ∩ Ω, including profile knots inside."""
    a, b = phi.domain
    lo, hi = max(a, c - r), min(b, c + r)
    pts = np.concatenate([np.linspace(lo, hi, 5), [c], phi.knots])
    pts = np.unique(np.clip(pts, lo, hi))
    return pts, hi - lo


def _windows(phi, budget):
    for r in _radii(phi):
        for c in _centers(phi, budget):
            pts, length = _window_points(phi, c, r)
            if length > 0:
                yield r, pts, length


# ---------------------------------------------------------------------------
# individual conditions
# ---------------------------------------------------------------------------

def _domain_envelope(phi, t, side):
    a, b = phi.domain
    return phi.envelope((a, b), t, side)


def _check_a0(phi):
    # largest t with φ⁺_Ω(t) <= 1 and smallest t with φ⁻_Ω(t) >= 1, by bisection on exact envelopes
    def bisect(pred, lo, hi):
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if pred(mid):
                hi = mid
            else:
                lo = mid
            if hi / lo - 1 < 1e-12:
                break
        return lo, hi

    inv = 1.0 / BETA_FLOOR
    if _domain_envelope(phi, BETA_FLOOR, Side.PLUS) > 1.0:
        x = _argext(phi, BETA_FLOOR, np.argmax)
        return ConditionReport("A0", FAILS, (x, x, BETA_FLOOR), {"beta_tested": BETA_FLOOR},
                               "analytic", "φ(x, β) > 1 for every tested β")
    if _domain_envelope(phi, inv, Side.MINUS) < 1.0:
        x = _argext(phi, inv, np.argmin)
        return ConditionReport("A0", FAILS, (x, x, inv), {"beta_tested": BETA_FLOOR},
                               "analytic", "φ(x, 1/β) < 1 for every tested β")
    if _domain_envelope(phi, 1.0, Side.PLUS) <= 1.0:
        t_plus = 1.0
    else:
        t_plus, _ = bisect(lambda t: _domain_envelope(phi, t, Side.PLUS) > 1.0, BETA_FLOOR, 1.0)
    if _domain_envelope(phi, 1.0, Side.MINUS) >= 1.0:
        t_minus = 1.0
    else:
        _, t_minus = bisect(lambda t: _domain_envelope(phi, t, Side.MINUS) >= 1.0, 1.0, inv)
    beta = min(1.0, t_plus, 1.0 / t_minus)
    return ConditionReport("A0", HOLDS, None, {"beta": beta}, "analytic",
                           "β from exact domain envelopes")


def _argext(phi, t, pick):
    a, b = phi.domain
    xs = np.unique(np.concatenate([np.linspace(a, b, 1025), phi.knots]))
    return float(xs[pick(phi.eval(xs, t))])


def _power_bounds(phi):
    """(lower, upper) exponents p⁻ and p⁺ with Inc_{p⁻} and Dec_{p⁺}, when known in closed form."""
    if isinstance(phi, Power):
        return phi.p, phi.p
    if isinstance(phi, VariableExponent):
        return _profile_range(phi.p, phi)
    if isinstance(phi, DoublePhase):
        return 1.0, phi.q
    return None


def _almost_monotone_witness(phi, x, exponent, increasing):
    """Search s < t with the almost-monotone inequality violated beyond L_TESTED."""
    ts = np.logspace(-8, 8, 161)
    g = np.asarray(phi.eval(np.full(ts.size, x), ts)) / ts ** exponent
    if increasing:
        # need g(s) <= L g(t) for s < t
        run = np.maximum.accumulate(g)
        ratio = np.where(g > 0, run / g, np.inf)
        j = int(np.argmax(ratio))
        i = int(np.argmax(g[: j + 1]))
    else:
        # need g(t) <= L g(s) for s < t
        run = np.minimum.accumulate(g)
        ratio = np.where(run > 0, g / run, np.inf)
        j = int(np.argmax(ratio))
        i = int(np.argmin(g[: j + 1]))
    return float(ratio[j]), (float(x), float(ts[i]), float(ts[j]))


def _check_almost_monotone(phi, name, exponent, budget, increasing):
    bounds = _power_bounds(phi)
    label = f"{name}({exponent:g})"
    if bounds is not None:
        lo, hi = bounds
        ok = exponent <= lo if increasing else exponent >= hi
        if ok:
            return ConditionReport(label, HOLDS, None, {"L": 1.0}, "analytic",
                                   f"exponent bounds [{lo:g}, {hi:g}]")
    a, b = phi.domain
    xs = np.unique(np.concatenate([np.linspace(a, b, max(9, min(257, budget // 10))), phi.knots]))
    worst, wit = 1.0, None
    for x in xs:
        ratio, w = _almost_monotone_witness(phi, x, exponent, increasing)
        if ratio > worst:
            worst, wit = ratio, w
    if worst > L_TESTED:
        return ConditionReport(label, FAILS, wit, {"L_tested": L_TESTED},
                               "analytic" if bounds is not None else "sampled",
                               "quotient ratio exceeds the tested constant")
    return ConditionReport(label, INCONCLUSIVE, None, {"L": worst}, "sampled",
                           "no violation on the sampled grid")


def _check_a1(phi, K, budget):
    profile = _main_profile(phi)
    if phi.x_independent:
        return ConditionReport("A1", HOLDS, None, {"beta": 1.0}, "analytic", "x-independent")
    if isinstance(phi, VariableExponent) and _structured(profile):
        return ConditionReport("A1", HOLDS, None, {}, "analytic",
                               "Lipschitz exponent is log-Hölder continuous")
    if isinstance(phi, DoublePhase) and _structured(profile) and phi.q <= 2.0:
        return ConditionReport("A1", HOLDS, None, {}, "analytic",
                               "Lipschitz coefficient with q <= 2")
    if isinstance(phi, Power) and _structured(profile) and _profile_range(profile, phi)[0] > 0:
        return ConditionReport("A1", HOLDS, None, {}, "analytic",
                               "Lipschitz weight bounded away from zero")
    betas = 2.0 ** -np.arange(0, 11)
    ok = np.ones(betas.size, dtype=bool)
    wit = {}
    for r, pts, length in _windows(phi, budget):
        X, Y = np.meshgrid(pts, pts, indexing="ij")
        X, Y = X.ravel(), Y.ravel()
        top = max(1.0, 100.0 * K / length)
        ts = np.logspace(-6, math.log10(top), 40)
        XX, YY, TT = (np.repeat(X, ts.size), np.repeat(Y, ts.size), np.tile(ts, X.size))
        fy = phi.eval(YY, TT)
        live = fy <= K / length
        if not np.any(live):
            continue
        XX, YY, TT, fy = XX[live], YY[live], TT[live], fy[live]
        for k, beta in enumerate(betas):
            if not ok[k]:
                continue
            bad = phi.eval(XX, beta * TT) > fy + 1.0
            if np.any(bad):
                ok[k] = False
                i = int(np.flatnonzero(bad)[0])
                wit[k] = (float(XX[i]), float(YY[i]), float(TT[i]), float(r))
        if not ok.any():
            break
    if ok.any():
        return ConditionReport("A1", INCONCLUSIVE, None, {"beta": float(betas[ok][0]), "K": K},
                               "sampled", "no violation on the sampled grid")
    k = betas.size - 1
    return ConditionReport("A1", FAILS, wit[k], {"beta_tested": float(betas[k]), "K": K}, "sampled",
                           "every tested β is violated")


def _va1_needed(phi, X, Y, T, fy):
    """Smallest ω with φ(x, t/(1+ω)) <= φ(y, t) + ω, per sample."""
    g0 = phi.eval(X, T) - fy
    out = np.zeros(X.size)
    bad = g0 > 0
    if not np.any(bad):
        return out
    x, t, f = X[bad], T[bad], fy[bad]
    lo = np.zeros(x.size)
    hi = g0[bad].copy()
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        viol = phi.eval(x, t / (1.0 + mid)) > f + mid
        lo = np.where(viol, mid, lo)
        hi = np.where(viol, hi, mid)
    out[bad] = hi
    return out


def _check_va1(phi, K, budget):
    profile = _main_profile(phi)
    if phi.x_independent:
        return ConditionReport("VA1", HOLDS, None, {"omega": "0"}, "analytic", "x-independent")
    if isinstance(phi, VariableExponent) and _structured(profile):
        return ConditionReport("VA1", HOLDS, None, {}, "analytic",
                               "Lipschitz exponent satisfies the strong log-Hölder condition")
    if isinstance(phi, DoublePhase) and _structured(profile) and phi.q < 2.0:
        return ConditionReport("VA1", HOLDS, None, {}, "analytic",
                               "Lipschitz coefficient with q < 2")
    if isinstance(phi, Power) and _structured(profile) and _profile_range(profile, phi)[0] > 0:
        return ConditionReport("VA1", HOLDS, None, {}, "analytic",
                               "Lipschitz weight bounded away from zero")
    needed = {}
    best = {}
    for r, pts, length in _windows(phi, budget):
        X, Y = np.meshgrid(pts, pts, indexing="ij")
        X, Y = X.ravel(), Y.ravel()
        top = max(1.0, 100.0 * K / length)
        ts = np.logspace(-6, math.log10(top), 40)
        XX, YY, TT = (np.repeat(X, ts.size), np.repeat(Y, ts.size), np.tile(ts, X.size))
        fy = phi.eval(YY, TT)
        live = fy <= K / length
        if not np.any(live):
            continue
        XX, YY, TT, fy = XX[live], YY[live], TT[live], fy[live]
        om = _va1_needed(phi, XX, YY, TT, fy)
        i = int(np.argmax(om))
        if om[i] > needed.get(r, -1.0):
            needed[r] = float(om[i])
            best[r] = (float(XX[i]), float(YY[i]), float(TT[i]), float(r))
    radii = sorted(needed, reverse=True)
    series = [needed[r] for r in radii]
    tail = series[-5:]
    if tail and min(tail) > 1e-3 and tail[-1] >= 0.5 * tail[0]:
        r = radii[-1]
        return ConditionReport("VA1", FAILS, best[r],
                               {"omega_tested": 0.5 * needed[r], "K": K,
                                "omega_needed": [[rr, needed[rr]] for rr in radii]},
                               "sampled", "required ω(r) does not vanish as r → 0")
    return ConditionReport("VA1", INCONCLUSIVE, None,
                           {"K": K, "omega_needed": [[rr, needed[rr]] for rr in radii]},
                           "sampled", "required ω(r) decays on the sampled radii")


def _oscillation_samples(profile, phi, budget):
    """Per radius: largest |p(x) - p(y)| over sampled pairs in windows of that radius."""
    out = []
    for r in _radii(phi, 36):
        best = (-1.0, None)
        for c in _centers(phi, budget):
            pts, length = _window_points(phi, c, r)
            if length <= 0:
                continue
            v = np.asarray(profile(pts), dtype=float)
            i, j = int(np.argmin(v)), int(np.argmax(v))
            if v[j] - v[i] > best[0]:
                best = (float(v[j] - v[i]), (float(pts[i]), float(pts[j])))
        out.append((float(r), *best))
    return out


def _check_strong_log_holder(phi, budget):
    profile = _main_profile(phi)
    if profile is None or _structured(profile):
        return ConditionReport("strongLogHolder", HOLDS, None, {}, "analytic",
                               "constant or Lipschitz profile")
    samples = _oscillation_samples(profile, phi, budget)
    prods = []
    for r, osc, pair in samples:
        d = abs(pair[1] - pair[0]) if pair else r
        prods.append(osc * math.log(math.e + 1.0 / max(d, 1e-300)) if pair and d > 0 else 0.0)
    tail = prods[-6:]
    if min(tail) > 1e-3 and tail[-1] >= 0.5 * tail[0]:
        k = len(prods) - 1
        r, osc, pair = samples[k]
        return ConditionReport("strongLogHolder", FAILS, (pair[0], pair[1], r),
                               {"product_tested": 0.5 * prods[k],
                                "limit_estimate": prods[k]}, "sampled",
                               "|p(x)-p(y)| log(e+1/|x-y|) does not vanish")
    return ConditionReport("strongLogHolder", INCONCLUSIVE, None, {"limit_estimate": prods[-1]},
                           "sampled", "product decays on the sampled radii")


def _check_alpha_holder(phi, alpha, budget):
    if alpha is None or not 0.0 < alpha:
        raise SpecError("alphaHolder needs a Hölder exponent α > 0", "alpha")
    profile = _main_profile(phi)
    if profile is None or profile.is_constant:
        return ConditionReport(f"alphaHolder({alpha:g})", HOLDS, None, {}, "analytic", "constant")
    if _structured(profile) and alpha <= 1.0:
        return ConditionReport(f"alphaHolder({alpha:g})", HOLDS, None, {}, "analytic",
                               "Lipschitz on a bounded interval")
    samples = _oscillation_samples(profile, phi, budget)
    worst = (0.0, None)
    for r, osc, pair in samples:
        if pair is None:
            continue
        d = abs(pair[1] - pair[0])
        if d > 0:
            q = osc / d ** alpha
            if q > worst[0]:
                worst = (q, (pair[0], pair[1], r))
    if worst[0] > HOLDER_TESTED:
        return ConditionReport(f"alphaHolder({alpha:g})", FAILS, worst[1],
                               {"holder_tested": HOLDER_TESTED}, "sampled",
                               "Hölder quotient exceeds the tested constant")
    return ConditionReport(f"alphaHolder({alpha:g})", INCONCLUSIVE, None,
                           {"holder_constant": worst[0]}, "sampled", "bounded quotient on samples")


def check_condition(phi: PhiFamily, condition: str, sampling_budget: int = 1000, *,
                    K: float = 1.0, p: float = None, q: float = None,
                    alpha: float = None) -> ConditionReport:
    """Verify one structural condition.

    ``condition`` is one of A0, A1, VA1, aInc, aDec, strongLogHolder and
    alphaHolder; ``p``/``q``/``alpha`` parametrize aInc/aDec/alphaHolder,
    ``K`` is the threshold constant of (A1)/(VA1).
    """
    if sampling_budget < 100:
        raise SpecError("sampling_budget must be >= 100", "sampling_budget")
    if condition == "A0":
        return _check_a0(phi)
    if condition == "A1":
        return _check_a1(phi, K, sampling_budget)
    if condition == "VA1":
        return _check_va1(phi, K, sampling_budget)
    if condition == "aInc":
        bounds = _power_bounds(phi)
        exponent = p if p is not None else (bounds[0] if bounds else 1.0)
        return _check_almost_monotone(phi, "aInc", exponent, sampling_budget, True)
    if condition == "aDec":
        bounds = _power_bounds(phi)
        exponent = q if q is not None else (bounds[1] if bounds else 2.0)
        return _check_almost_monotone(phi, "aDec", exponent, sampling_budget, False)
    if condition == "strongLogHolder":
        return _check_strong_log_holder(phi, sampling_budget)
    if condition == "alphaHolder":
        return _check_alpha_holder(phi, alpha, sampling_budget)
    raise SpecError(f"unknown condition {condition!r}; expected one of {', '.join(CONDITIONS)}",
                    "condition")


def witness_violates(phi: PhiFamily, report: ConditionReport) -> bool:
    """Re-evaluate a Fails witness against the defining inequality."""
    if report.verdict != FAILS or report.witness is None:
        return False
    w = report.witness
    c = report.constants
    name = report.condition
    if name == "A0":
        x, _, t = w
        beta = c["beta_tested"]
        return phi.eval(x, beta) > 1.0 if t == beta else phi.eval(x, 1.0 / beta) < 1.0
    if name == "A1":
        x, y, t, r = w
        return phi.eval(x, c["beta_tested"] * t) > phi.eval(y, t) + 1.0
    if name == "VA1":
        x, y, t, r = w
        om = c["omega_tested"]
        return phi.eval(x, t / (1.0 + om)) > phi.eval(y, t) + om
    if name.startswith("aInc") or name.startswith("aDec"):
        exponent = float(name[name.index("(") + 1:-1])
        x, s, t = w
        gs = phi.eval(x, s) / s ** exponent
        gt = phi.eval(x, t) / t ** exponent
        if name.startswith("aInc"):
            return s < t and gs > c["L_tested"] * gt
        return s < t and gt > c["L_tested"] * gs
    profile = _main_profile(phi)
    if name == "strongLogHolder":
        x, y, r = w
        d = abs(x - y)
        return 0 < d <= 2 * r and abs(profile(x) - profile(y)) * math.log(math.e + 1 / d) >= c["product_tested"]
    if name.startswith("alphaHolder"):
        alpha = float(name[name.index("(") + 1:-1])
        x, y, r = w
        d = abs(x - y)
        return d > 0 and abs(profile(x) - profile(y)) / d ** alpha > c["holder_tested"]
    return False


# ---------------------------------------------------------------------------
# Jensen gap
# ---------------------------------------------------------------------------

def jensen_gap(phi: PhiFamily, B, f, omega: Callable, L: float = 1.0) -> float:
    """φ⁻_B(⨍_B|f| / (1+ω(r))) − (⨍_B φ(x, f) + ω(r)), r the radius of B.

    Requires ϱ_φ(L f) <= 1 over B; non-positive for (VA1) families.
    """
    from .variation import _adaptive_integral

    l, r = float(B[0]), float(B[1])
    if not l < r:
        raise SpecError("B must be a non-degenerate interval", "B")
    phi._check_domain([l, r])
    if not phi.convex:
        raise PreconditionViolated("Jensen gap requires a convex Φ-function")
    radius = 0.5 * (r - l)
    pts = np.unique(np.concatenate([[l, r], phi.knots[(phi.knots > l) & (phi.knots < r)]]))
    absf = lambda x: abs(float(f(x)))
    modular, _ = _adaptive_integral(lambda x: float(phi.eval(x, L * absf(x))), pts)
    if modular > 1.0:
        raise PreconditionViolated(f"ϱ_φ(L f) = {modular:.6g} > 1 on B")
    mean_f = _adaptive_integral(absf, pts)[0] / (r - l)
    mean_phi = _adaptive_integral(lambda x: float(phi.eval(x, absf(x))), pts)[0] / (r - l)
    w = float(omega(radius))
    return phi.envelope((l, r), mean_f / (1.0 + w), Side.MINUS) - (mean_phi + w)
