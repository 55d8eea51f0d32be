"""Riesz φ-variation functionals, Luxemburg norms and the representation formula.

Three partition functionals are computed for a BV function ``f`` on ``I``:

* ``sup_variation``     V(f): sup over all partitions of Σ φ+_{I_k}(|Δ_k f|/|I_k|)|I_k|
* ``limsup_variation``  the same sums with φ+ (upper) or φ- (lower) as the
                        mesh tends to zero
* ``representation_functional``  ∫ φ(x, |f'|) dx + ∫ φ'_∞ d|Dˢf|

The sup is a certified lower bound from a dynamic program over refining grids;
the limsup is estimated level by level on dyadic meshes and extrapolated.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from . import kernels
from .bvfunc import BVFunction, Partition, PiecewisePoly
from .phi import PhiFamily, Power, Side

CONVERGED = "converged"
DIVERGENT = "divergent"
BUDGET_EXHAUSTED = "budget_exhausted"

DIVERGENCE_CAP = 1e12
DIVERGENCE_FACTOR = 1.5
NORM_RTOL = 1e-8
MAX_SCALING_EXP = 100
QUAD_TOL = 1e-9


@dataclass
class VariationEstimate:
    value: float
    status: str
    mesh_values: list = field(default_factory=list)
    partition_used: Optional[Partition] = None
    last_value: float = math.nan

    @property
    def is_finite(self):
        return self.status != DIVERGENT and math.isfinite(self.value)

    def to_dict(self):
        d = {"value": self.value, "status": self.status,
             "mesh_values": [[h, v] for h, v in self.mesh_values]}
        if self.partition_used is not None:
            d["partition"] = self.partition_used.points.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        val = d["value"]
        value = math.inf if val == "inf" else float(val)
        mesh = [(float(h), math.inf if v == "inf" else float(v)) for h, v in d.get("mesh_values", [])]
        part = Partition(d["partition"]) if d.get("partition") else None
        last = mesh[-1][1] if mesh else value
        return cls(value, d["status"], mesh, part, last)


@dataclass
class NormResult:
    value: float
    modular_at_value: float
    bisection_iterations: int

    def to_dict(self):
        return {"value": self.value, "modular_at_value": self.modular_at_value,
                "bisection_iterations": self.bisection_iterations}

    @classmethod
    def from_dict(cls, d):
        val = d["value"]
        return cls(math.inf if val == "inf" else float(val),
                   float(d["modular_at_value"]) if d["modular_at_value"] != "inf" else math.inf,
                   int(d["bisection_iterations"]))


# ---------------------------------------------------------------------------
# partition sums
# ---------------------------------------------------------------------------

def _check_compatible(phi: PhiFamily, f: BVFunction):
    a, b = phi.domain
    if f.a < a or f.b > b:
        raise ValueError(f"function interval {f.interval} is not inside the φ domain {phi.domain}")


def _cell_terms(phi, l, r, fl, fr, side):
    ell = r - l
    t = np.abs(fl - fr) / ell
    return phi.envelope_cells(l, r, t, side) * ell


def partition_terms(phi: PhiFamily, f: BVFunction, points, side=Side.PLUS):
    """The summands φ±_{I_k}(|Δ_k f|/|I_k|)|I_k| for a partition given by its nodes."""
    pts = np.asarray(points, dtype=float)
    fx = f.evaluate(pts)
    return _cell_terms(phi, pts[:-1], pts[1:], fx[:-1], fx[1:], Side.parse(side))


def _fsum(terms):
    terms = np.asarray(terms, dtype=float)
    if np.any(np.isinf(terms)):
        return math.inf
    return math.fsum(terms)


def variation_on_partition(phi: PhiFamily, f: BVFunction, P, side=Side.PLUS):
    """V^φ(f, P) with compensated summation in left-to-right order."""
    _check_compatible(phi, f)
    pts = P.points if isinstance(P, Partition) else np.asarray(P, dtype=float)
    if not (math.isclose(pts[0], f.a) and math.isclose(pts[-1], f.b)):
        raise ValueError("partition does not cover the function interval")
    Partition(pts)
    return _fsum(partition_terms(phi, f, pts, side))


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

def _merge_grid(base, mandatory, a, b):
    """Union of grid nodes; base nodes closer than 1e-12·|I| to a mandatory node are dropped."""
    mandatory = np.unique(np.clip(np.asarray(mandatory, dtype=float), a, b))
    base = np.asarray(base, dtype=float)
    tol = 1e-12 * (b - a)
    if mandatory.size:
        idx = np.clip(np.searchsorted(mandatory, base), 1, mandatory.size) - 1
        near = np.abs(base - mandatory[idx]) <= tol
        idx2 = np.clip(idx + 1, 0, mandatory.size - 1)
        near |= np.abs(base - mandatory[idx2]) <= tol
        base = base[~near]
    pts = np.union1d(base, mandatory)
    pts = np.union1d(pts, [a, b])
    return pts[(pts >= a) & (pts <= b)]


def mandatory_points(phi: PhiFamily, f: BVFunction, extra=None):
    pts = [f.mandatory_points(), phi.knots]
    if extra is not None:
        pts.append(np.asarray(extra, dtype=float))
    pts = np.concatenate(pts)
    return np.unique(pts[(pts >= f.a) & (pts <= f.b)])


def atom_neighbours(f: BVFunction, rel=1e-10):
    """Nodes just right of each atom; a left-continuous jump at c is seen from (c, c + δ]."""
    delta = rel * (f.b - f.a)
    pts = f.atom_locs + delta
    return pts[pts < f.b]


def dp_on_grid(phi: PhiFamily, f: BVFunction, grid, side=Side.PLUS, use_numba=None):
    """Best partition with all nodes in ``grid``; returns (value, Partition)."""
    grid = np.asarray(grid, dtype=float)
    side = Side.parse(side)
    lo1, hi1, lo2, hi2 = phi.cell_ranges(grid[:-1], grid[1:])
    fx = f.evaluate(grid) if isinstance(f, BVFunction) else np.asarray(f(grid), dtype=float)
    best, prev = kernels.dp_sup(grid, fx, lo1, hi1, lo2, hi2, phi.kind, phi.prm,
                                side is Side.PLUS, use_numba)
    path = kernels.backtrack(prev)
    return float(best[-1]), Partition(grid[path])


def _divergence_check(values):
    """Growth pattern of the last three finite rounds that signals blow-up."""
    if not values:
        return False
    if math.isinf(values[-1]) or values[-1] > DIVERGENCE_CAP:
        return True
    if len(values) < 3:
        return False
    v1, v2, v3 = values[-3:]
    d1, d2 = v2 - v1, v3 - v2
    if d1 <= 0 or d2 <= 0:
        return False
    if d2 <= 1e-9 * abs(v3):
        return False
    # a 1.5x jump over three rounds, or increments that stay above 0.1% of
    # the value without decaying (slow power-law blow-up)
    if v1 > 0 and v3 >= DIVERGENCE_FACTOR * v1 and d2 >= 0.5 * d1:
        return True
    return d2 >= d1 and d1 >= 1e-3 * abs(v3)


def sup_variation(phi: PhiFamily, f: BVFunction, grid_n: int = 129, refine_rounds: int = 3,
                  side=Side.PLUS, tol: float = 1e-6, extra_points=None,
                  use_numba=None) -> VariationEstimate:
    """V^φ_I(f) as a certified lower bound from partitions on refining grids.

    The grid starts with ``grid_n`` uniform nodes plus all mandatory nodes
    (atoms, density breakpoints and zeros, profile knots) and is doubled
    ``refine_rounds`` times. Grids are nested, so the rounds are monotone.
    ``side=MINUS`` gives the sup of the lower-envelope sums instead.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    _check_compatible(phi, f)
    side = Side.parse(side)
    mand = mandatory_points(phi, f, extra_points)
    mesh_values = []
    best_val, best_part = -math.inf, None
    for r in range(refine_rounds + 1):
        n = (grid_n - 1) * 2 ** r + 1
        grid = _merge_grid(np.linspace(f.a, f.b, n), mand, f.a, f.b)
        _, part = dp_on_grid(phi, f, grid, side, use_numba)
        val = variation_on_partition(phi, f, part, side)
        mesh_values.append(((f.b - f.a) / (n - 1), val))
        if val > best_val or best_part is None:
            best_val, best_part = val, part
        if math.isinf(val):
            break
    values = [v for _, v in mesh_values]
    if math.isinf(best_val) or _divergence_check(values):
        status, value = DIVERGENT, math.inf
    elif len(values) >= 2 and abs(values[-1] - values[-2]) <= tol * max(1.0, abs(values[-1])):
        status, value = CONVERGED, best_val
    else:
        status, value = BUDGET_EXHAUSTED, best_val
    return VariationEstimate(value, status, mesh_values, best_part, values[-1])


# ---------------------------------------------------------------------------
# limsup estimation
# ---------------------------------------------------------------------------

def _hill_climb(phi, f, pts, h, side, passes=3):
    """Jitter interior nodes to increase the sum while keeping every cell <= h."""
    pts = pts.copy()
    fx = f.evaluate(pts)
    terms = _cell_terms(phi, pts[:-1], pts[1:], fx[:-1], fx[1:], side)
    m = pts.size - 1
    if m < 2:
        return pts, terms
    step = float(np.min(np.diff(pts))) / 4.0
    min_gap = 1e-12 * (pts[-1] - pts[0])
    for _ in range(passes):
        for parity in (1, 2):
            idx = np.arange(parity, m, 2)
            if idx.size == 0:
                continue
            for direction in (1.0, -1.0):
                new = pts[idx] + direction * step
                left, right = pts[idx - 1], pts[idx + 1]
                ok = (new - left > min_gap) & (right - new > min_gap)
                ok &= (new - left <= h) & (right - new <= h)
                if not np.any(ok):
                    continue
                k = idx[ok]
                nx = new[ok]
                fnew = f.evaluate(nx)
                tl = _cell_terms(phi, pts[k - 1], nx, fx[k - 1], fnew, side)
                tr = _cell_terms(phi, nx, pts[k + 1], fnew, fx[k + 1], side)
                with np.errstate(invalid="ignore"):
                    gain = (tl + tr) - (terms[k - 1] + terms[k])
                acc = gain > 0
                if np.any(acc):
                    ka = k[acc]
                    pts[ka] = nx[acc]
                    fx[ka] = fnew[acc]
                    terms[ka - 1] = tl[acc]
                    terms[ka] = tr[acc]
        step /= 2.0
    return pts, terms


def _aitken(values):
    if len(values) < 3 or any(math.isinf(v) for v in values[-3:]):
        return values[-1]
    v1, v2, v3 = values[-3:]
    d1, d2 = v2 - v1, v3 - v2
    scale = max(1.0, abs(v3))
    if abs(d2) <= 1e-14 * scale:
        return v3
    if d1 == 0 or d1 * d2 <= 0:
        return v3
    r = d2 / d1
    if not 0 < r < 0.95:
        return v3
    return v3 + d2 * r / (1.0 - r)


def _wynn4(v):
    """ε_4 of Wynn's epsilon table on five values (exact for two geometric terms)."""
    prev, cur = [0.0] * len(v), list(v)
    for _ in range(4):
        nxt = []
        for j in range(len(cur) - 1):
            d = cur[j + 1] - cur[j]
            if d == 0:
                return None
            nxt.append(prev[j + 1] + 1.0 / d)
        prev, cur = cur, nxt
    return cur[-1] if math.isfinite(cur[-1]) else None


def _extrapolate(values):
    """Tail estimate of the level values.

    Aitken's Δ² on the last three levels assumes one geometric rate. When the
    excess mixes two rates (an atom term and the smooth part) ε_4 of Wynn's
    table on the last five levels removes both; it is used only if its
    correction to the Aitken value is no larger than Aitken's own correction.
    """
    a = _aitken(values)
    if len(values) >= 5 and a != values[-1] and all(math.isfinite(v) for v in values[-5:]):
        w = _wynn4(values[-5:])
        if w is not None and abs(w - a) <= abs(a - values[-1]):
            return w
    return a


def _split_long_cells(pts, h):
    gaps = np.diff(pts)
    if np.all(gaps <= h):
        return pts
    out = [pts[:1]]
    for l, r, g in zip(pts[:-1], pts[1:], gaps):
        k = max(1, int(math.ceil(g / h - 1e-9)))
        out.append(np.linspace(l, r, k + 1)[1:])
    return np.concatenate(out)


def _atom_adapted(phi, f, n_cells, side, mand, shrink_steps=20):
    """Partition of mesh <= h with a chosen cell around each atom.

    The cell containing an atom c is [c, c + ℓ] or [c - ℓ + δ, c + δ] with
    ℓ = h 2^-k, whichever raises the total sum most. Picking it per level
    keeps the level values regular enough to extrapolate; where φ'_∞ = ∞
    short cells win and the values grow geometrically, which the divergence
    test needs to see.
    """
    a, b = f.a, f.b
    h = (b - a) / n_cells
    pts = _merge_grid(np.linspace(a, b, n_cells + 1), mand, a, b)
    floor = 1e-10 * (b - a)
    lengths = h * 0.5 ** np.arange(shrink_steps + 1)
    lengths = lengths[lengths >= floor]
    taken_until = -math.inf
    for c, _ in f.atoms:
        ls, rs = [], []
        for ell in lengths:
            delta = max(1e-9 * ell, 1e-14 * (b - a))
            if c + ell <= b:
                ls.append(c)
                rs.append(c + ell)
            if c > a and c + delta < b:
                ls.append(max(a, c - ell + delta))
                rs.append(c + delta)
        ls, rs = np.array(ls), np.array(rs)
        keep = ls > taken_until
        if not np.any(keep):
            continue
        ls, rs = ls[keep], rs[keep]
        # gain in the total sum from replacing the cells over [p, q] by
        # [p, l], [l, r], [r, q], where p <= l and q >= r are existing nodes
        fx = f.evaluate(pts)
        base = _cell_terms(phi, pts[:-1], pts[1:], fx[:-1], fx[1:], side)
        cum = np.concatenate([[0.0], np.cumsum(base)])
        ip = np.searchsorted(pts, ls, side="right") - 1
        iq = np.searchsorted(pts, rs, side="left")
        p, q = pts[ip], pts[iq]
        fl, fr = f.evaluate(ls), f.evaluate(rs)
        new = _cell_terms(phi, ls, rs, fl, fr, side)
        left, right = np.zeros(ls.size), np.zeros(ls.size)
        m = p < ls
        if np.any(m):
            left[m] = _cell_terms(phi, p[m], ls[m], fx[ip[m]], fl[m], side)
        m = q > rs
        if np.any(m):
            right[m] = _cell_terms(phi, rs[m], q[m], fr[m], fx[iq[m]], side)
        with np.errstate(invalid="ignore"):
            gain = new + left + right - (cum[iq] - cum[ip])
        gain = np.where(np.isnan(gain), -np.inf, gain)
        i = int(np.argmax(gain))
        l, r = ls[i], rs[i]
        pts = np.union1d(pts[(pts <= l) | (pts >= r)], [l, r])
        taken_until = r
    return _split_long_cells(pts, h * (1 + 1e-12))


def limsup_level(phi, f, n_cells, side=Side.PLUS, mandatory=None, hill_passes=3):
    """Best sum found among partitions of mesh <= |I|/n_cells; returns (value, points)."""
    side = Side.parse(side)
    a, b = f.a, f.b
    h = (b - a) / n_cells
    mand = mandatory if mandatory is not None else mandatory_points(phi, f)
    candidates = []
    uni = np.linspace(a, b, n_cells + 1)
    candidates.append(uni)
    merged = _merge_grid(uni, mand, a, b)
    if merged.size != uni.size or not np.array_equal(merged, uni):
        candidates.append(merged)
    if f.atoms:
        candidates.append(_atom_adapted(phi, f, n_cells, side, mand))
    best_val, best_pts = -math.inf, None
    for pts in candidates:
        val = _fsum(partition_terms(phi, f, pts, side))
        if val > best_val:
            best_val, best_pts = val, pts
    if hill_passes > 0:
        start = _merge_grid(np.linspace(a, b, 2 * n_cells + 1), mand, a, b)
        pts, terms = _hill_climb(phi, f, start, h * (1 + 1e-12), side, hill_passes)
        val = _fsum(terms)
        if val > best_val:
            best_val, best_pts = val, pts
    return best_val, best_pts


def limsup_variation(phi: PhiFamily, f: BVFunction, side=Side.PLUS, mesh_rounds: int = 12,
                     start_level: int = 1, hill_passes: int = 3,
                     tol: float = 1e-4) -> VariationEstimate:
    """Upper (PLUS) or lower (MINUS) limsup variation as the mesh tends to zero.

    Level ``n`` searches partitions of mesh <= |I|/2^n: the uniform one, the
    uniform one merged with the mandatory nodes, and a hill-climbed jitter of
    the half-mesh partition. The last three levels are extrapolated. Three
    rounds of non-decaying growth, or values above 1e12, are reported as
    divergence with value inf.
    """
    if mesh_rounds < 4:
        raise ValueError("mesh_rounds must be >= 4")
    _check_compatible(phi, f)
    side = Side.parse(side)
    mand = mandatory_points(phi, f)
    mesh_values = []
    for n in range(start_level, start_level + mesh_rounds):
        cells = 2 ** n
        val, _ = limsup_level(phi, f, cells, side, mand, hill_passes)
        mesh_values.append(((f.b - f.a) / cells, val))
        if math.isinf(val) or val > DIVERGENCE_CAP:
            break
    values = [v for _, v in mesh_values]
    if _divergence_check(values):
        return VariationEstimate(math.inf, DIVERGENT, mesh_values, None, values[-1])
    value = _extrapolate(values)
    status = CONVERGED if abs(value - values[-1]) <= tol * (1.0 + abs(value)) else BUDGET_EXHAUSTED
    return VariationEstimate(value, status, mesh_values, None, values[-1])


# ---------------------------------------------------------------------------
# integrals
# ---------------------------------------------------------------------------

def _adaptive_integral(func, points, tol=QUAD_TOL):
    """∫ func over [points[0], points[-1]], integrating each gap separately.

    Subintervals whose quad error estimate is too large are bisected until the
    total error estimate is below ``tol * (1 + |value|)``.
    """
    pieces = list(zip(points[:-1], points[1:]))
    values, errors = [], []
    for _ in range(12):
        values, errors = [], []
        for l, r in pieces:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                v, e = integrate.quad(func, l, r, epsabs=tol * 1e-2, epsrel=tol * 1e-2, limit=200)
            if not math.isfinite(v):
                return math.inf, math.inf
            values.append(v)
            errors.append(e)
        total = math.fsum(values)
        err = math.fsum(errors)
        if err <= tol * (1.0 + abs(total)):
            return total, err
        worst = max(range(len(pieces)), key=lambda i: errors[i])
        l, r = pieces[worst]
        m = 0.5 * (l + r)
        pieces[worst:worst + 1] = [(l, m), (m, r)]
    return math.fsum(values), math.fsum(errors)


def _integration_points(phi, lo, hi, *extra):
    pts = [np.array([lo, hi]), phi.knots]
    pts.extend(np.asarray(e, dtype=float) for e in extra)
    pts = np.unique(np.concatenate(pts))
    return pts[(pts >= lo) & (pts <= hi)]


def lphi_modular(phi: PhiFamily, g, points=None, tol=QUAD_TOL) -> float:
    """ϱ_φ(g) = ∫ φ(x, |g(x)|) dx for a piecewise polynomial, BV function or callable ``g``."""
    if isinstance(g, PiecewisePoly):
        lo, hi = g.interval
        split = g.split_points()
    elif isinstance(g, BVFunction):
        lo, hi = g.interval
        split = g.mandatory_points()
    else:
        lo, hi = phi.domain
        split = [] if points is None else points
    pts = _integration_points(phi, lo, hi, split)

    def integrand(x):
        return float(phi.eval(x, abs(float(g(x)))))

    value, _ = _adaptive_integral(integrand, pts, tol)
    return value


def representation_functional(phi: PhiFamily, f: BVFunction, tol=QUAD_TOL) -> float:
    """∫_I φ(x, |f'|) dx + Σ_atoms φ'_∞(c)|h|, with 0·∞ = 0."""
    _check_compatible(phi, f)
    singular = []
    for c, h in f.atoms:
        slope = float(phi.prime_infinity(c))
        if abs(h) == 0.0:
            continue
        if math.isinf(slope):
            return math.inf
        singular.append(slope * abs(h))
    ac = lphi_modular(phi, f.density, tol=tol)
    return math.fsum([ac, *singular])


# ---------------------------------------------------------------------------
# Luxemburg norms
# ---------------------------------------------------------------------------

def _as_value(v):
    if isinstance(v, VariationEstimate):
        return v.value
    return float(v)


def luxemburg_norm(modular: Callable, f, rtol: float = NORM_RTOL) -> NormResult:
    """inf{λ > 0 : modular(f/λ) <= 1} by bracketing and bisection.

    ``modular`` maps a scaled copy of ``f`` (anything with ``.scaled``) to a
    number or a :class:`VariationEstimate`. Returns 0 when the modular
    vanishes at every tested scale and inf when no λ <= 2^100 works.
    """
    calls = 0

    def rho(lam):
        nonlocal calls
        calls += 1
        return _as_value(modular(f.scaled(1.0 / lam)))

    r1 = rho(1.0)
    if r1 <= 1.0:
        hi, r_hi = 1.0, r1
        lo = None
        lam = 1.0
        for _ in range(MAX_SCALING_EXP):
            lam /= 2.0
            r = rho(lam)
            if r > 1.0:
                lo = lam
                break
            hi, r_hi = lam, r
        if lo is None:
            return NormResult(0.0, r_hi, calls)
    else:
        lo = 1.0
        hi = None
        lam = 1.0
        for _ in range(MAX_SCALING_EXP):
            lam *= 2.0
            r = rho(lam)
            if r <= 1.0:
                hi, r_hi = lam, r
                break
            lo = lam
        if hi is None:
            return NormResult(math.inf, math.inf, calls)
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        r = rho(mid)
        if r <= 1.0:
            hi, r_hi = mid, r
        else:
            lo = mid
    return NormResult(hi, r_hi, calls)


def rbv_norm(phi: PhiFamily, f: BVFunction, grid_n=129, refine_rounds=2, **kw) -> NormResult:
    """‖f‖_{RBV^φ} using the grid-DP sup variation as the modular."""
    return luxemburg_norm(lambda g: sup_variation(phi, g, grid_n, refine_rounds, **kw).value, f)


def limsup_norm(phi: PhiFamily, f: BVFunction, mesh_rounds=10, **kw) -> NormResult:
    """Luxemburg norm with the upper limsup variation as the modular."""
    return luxemburg_norm(lambda g: limsup_variation(phi, g, Side.PLUS, mesh_rounds, **kw).value, f)


def lphi_norm(phi: PhiFamily, g) -> NormResult:
    """‖g‖_{L^φ}."""
    return luxemburg_norm(lambda s: lphi_modular(phi, s), g)


def essential_variation_grid(f, grid_n: int, interval=None, use_numba=None) -> float:
    """Classical variation over partitions with nodes on a uniform grid (φ(t) = t DP).

    For a left-continuous BV function this converges to |Df|(I) under grid
    refinement.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    if interval is None:
        interval = f.interval
    a, b = (float(v) for v in interval)
    return classical_variation(f, np.linspace(a, b, int(grid_n)), use_numba)


def classical_variation(f, grid, use_numba=None) -> float:
    """DP supremum of Σ|Δ_k f| over partitions with nodes in ``grid``."""
    grid = np.asarray(grid, dtype=float)
    phi = Power(1.0, domain=(grid[0], grid[-1]))
    ones = np.ones(grid.size - 1)
    fx = f.evaluate(grid) if isinstance(f, BVFunction) else np.asarray(f(grid), dtype=float)
    best, _ = kernels.dp_sup(grid, fx, ones, ones, ones * 0, ones * 0, phi.kind, phi.prm,
                             True, use_numba)
    return float(best[-1])
