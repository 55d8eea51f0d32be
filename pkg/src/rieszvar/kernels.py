"""Hot numeric kernels.

Every kernel exists twice: a scalar-loop version compiled with numba and a
vectorized numpy version. ``USE_NUMBA`` (see ``_accel``) picks one at import
time; both are importable directly so tests and the benchmark can compare them.

A Φ-function enters the kernels as ``(kind, prm)`` plus per-interval ranges
``lo1, hi1, lo2, hi2`` of its (at most two) x-dependent profiles. ``prm`` is a
flat float array::

    prm[0]  exponent (Power p, DoublePhase q; unused otherwise)
    prm[1]  1.0 if the Chen-Levine-Rao continuity correction is on
    prm[2]  number of Orlicz terms m
    prm[3 + 3k : 6 + 3k]  (term type, coefficient, parameter) for k < m
"""
import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit

POWER = 0
ORLICZ = 1
VAREXP = 2
DOUBLE_PHASE = 3
CLR = 4

TERM_POWER = 0      # c * t**e
TERM_HINGE = 1      # c * max(t - e, 0)
TERM_SOFT = 2       # c * t**2 / (e + t)


@njit
def _orlicz_point(t, prm):
    total = 0.0
    m = int(prm[2])
    for k in range(m):
        typ = int(prm[3 + 3 * k])
        c = prm[4 + 3 * k]
        e = prm[5 + 3 * k]
        if c == 0.0 or t == 0.0:
            continue
        if typ == TERM_POWER:
            total += c * t ** e
        elif typ == TERM_HINGE:
            if t > e:
                total += c * (t - e)
        else:
            if np.isinf(t):
                total += np.inf
            else:
                total += c * t * t / (e + t)
    return total


@njit
def phi_point(kind, t, v1, v2, prm):
    """φ(x, t) given the profile values v1, v2 at x."""
    if kind == POWER:
        if v1 == 0.0:
            return 0.0
        return v1 * t ** prm[0]
    if kind == ORLICZ:
        return _orlicz_point(t, prm)
    if kind == VAREXP:
        return t ** v1
    if kind == DOUBLE_PHASE:
        if v1 == 0.0 or t == 0.0:
            return t
        return t + v1 * t ** prm[0]
    # Chen-Levine-Rao
    if t <= 1.0:
        return t ** v1 / v1
    if prm[1] > 0.5:
        return t - 1.0 + 1.0 / v1
    return t - 1.0 - 1.0 / v2


@njit
def phi_env(kind, t, lo1, hi1, lo2, hi2, prm, plus):
    """sup (plus) or inf of φ(·, t) over an interval with the given profile ranges."""
    if kind == VAREXP:
        v1 = hi1 if (t >= 1.0) == plus else lo1
        return phi_point(kind, t, v1, 0.0, prm)
    if kind == CLR:
        if plus:
            return phi_point(kind, t, lo1, hi2, prm)
        return phi_point(kind, t, hi1, lo2, prm)
    if kind == ORLICZ:
        return _orlicz_point(t, prm)
    return phi_point(kind, t, hi1 if plus else lo1, 0.0, prm)


# Per-family envelopes. The loops below take one of these as an argument so
# numba compiles a branch-free specialization for each family.

@njit
def _env_power(t, lo1, hi1, lo2, hi2, prm, plus):
    w = hi1 if plus else lo1
    if w == 0.0:
        return 0.0
    return w * t ** prm[0]


@njit
def _env_orlicz(t, lo1, hi1, lo2, hi2, prm, plus):
    return _orlicz_point(t, prm)


@njit
def _env_varexp(t, lo1, hi1, lo2, hi2, prm, plus):
    return t ** (hi1 if (t >= 1.0) == plus else lo1)


@njit
def _env_double_phase(t, lo1, hi1, lo2, hi2, prm, plus):
    a = hi1 if plus else lo1
    if a == 0.0 or t == 0.0:
        return t
    return t + a * t ** prm[0]


@njit
def _env_clr(t, lo1, hi1, lo2, hi2, prm, plus):
    if plus:
        return phi_point(CLR, t, lo1, hi2, prm)
    return phi_point(CLR, t, hi1, lo2, prm)


_ENV_NB = (_env_power, _env_orlicz, _env_varexp, _env_double_phase, _env_clr)


@njit
def _env_many_nb(t, lo1, hi1, lo2, hi2, prm, plus, env):
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        out[i] = env(t[i], lo1[i], hi1[i], lo2[i], hi2[i], prm, plus)
    return out


@njit
def _dp_sup_nb(x, fx, lo1, hi1, lo2, hi2, prm, plus, env):
    n = x.shape[0]
    best = np.full(n, -np.inf)
    prev = np.zeros(n, dtype=np.int64)
    best[0] = 0.0
    for j in range(1, n):
        l1 = np.inf
        h1 = -np.inf
        l2 = np.inf
        h2 = -np.inf
        bj = -np.inf
        pj = 0
        xj = x[j]
        fj = fx[j]
        for i in range(j - 1, -1, -1):
            # cell i is [x[i], x[i+1]]; ranges over [x[i], x[j]] accumulate leftwards
            l1 = min(l1, lo1[i])
            h1 = max(h1, hi1[i])
            l2 = min(l2, lo2[i])
            h2 = max(h2, hi2[i])
            ell = xj - x[i]
            t = abs(fx[i] - fj) / ell
            v = best[i] + env(t, l1, h1, l2, h2, prm, plus) * ell
            if v > bj:
                bj = v
                pj = i
        best[j] = bj
        prev[j] = pj
    return best, prev


# ---------------------------------------------------------------------------
# numpy twins
# ---------------------------------------------------------------------------

def _orlicz_point_np(t, prm):
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    m = int(prm[2])
    with np.errstate(invalid="ignore", over="ignore"):
        for k in range(m):
            typ = int(prm[3 + 3 * k])
            c = prm[4 + 3 * k]
            e = prm[5 + 3 * k]
            if c == 0.0:
                continue
            if typ == TERM_POWER:
                term = c * t ** e
            elif typ == TERM_HINGE:
                term = c * np.maximum(t - e, 0.0)
            else:
                term = np.where(np.isinf(t), np.inf, c * t * t / (e + t))
            total = total + np.where(t == 0.0, 0.0, term)
    return total


def phi_point_np(kind, t, v1, v2, prm):
    t = np.asarray(t, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        if kind == POWER:
            return np.where(v1 == 0.0, 0.0, v1 * t ** prm[0])
        if kind == ORLICZ:
            return _orlicz_point_np(t, prm)
        if kind == VAREXP:
            return t ** v1
        if kind == DOUBLE_PHASE:
            return np.where((v1 == 0.0) | (t == 0.0), t, t + v1 * t ** prm[0])
        low = t ** v1 / v1
        high = t - 1.0 + 1.0 / v1 if prm[1] > 0.5 else t - 1.0 - 1.0 / v2
        return np.where(t <= 1.0, low, high)


def phi_env_np(kind, t, lo1, hi1, lo2, hi2, prm, plus):
    t = np.asarray(t, dtype=float)
    if kind == VAREXP:
        v1 = np.where((t >= 1.0) == plus, hi1, lo1)
        return phi_point_np(kind, t, v1, 0.0, prm)
    if kind == CLR:
        if plus:
            return phi_point_np(kind, t, lo1, hi2, prm)
        return phi_point_np(kind, t, hi1, lo2, prm)
    if kind == ORLICZ:
        return _orlicz_point_np(t, prm)
    return phi_point_np(kind, t, hi1 if plus else lo1, 0.0, prm)


def dphi_point_np(kind, t, v1, v2, prm):
    """Right derivative ∂φ/∂t (x, t) for t >= 0."""
    t = np.asarray(t, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        if kind == POWER:
            p = prm[0]
            return v1 * (np.ones_like(t) if p == 1.0 else p * t ** (p - 1.0))
        if kind == ORLICZ:
            total = np.zeros_like(t)
            for k in range(int(prm[2])):
                typ = int(prm[3 + 3 * k])
                c = prm[4 + 3 * k]
                e = prm[5 + 3 * k]
                if typ == TERM_POWER:
                    total = total + (c * np.ones_like(t) if e == 1.0 else c * e * t ** (e - 1.0))
                elif typ == TERM_HINGE:
                    total = total + c * (t >= e)
                else:
                    total = total + c * (t * t + 2.0 * e * t) / (e + t) ** 2
            return total
        if kind == VAREXP:
            return np.where(v1 == 1.0, 1.0, v1 * t ** (v1 - 1.0))
        if kind == DOUBLE_PHASE:
            q = prm[0]
            return 1.0 + v1 * q * t ** (q - 1.0)
        return np.where(t <= 1.0, np.where(v1 == 1.0, 1.0, t ** (v1 - 1.0)), 1.0)


def _env_many_np(kind, t, lo1, hi1, lo2, hi2, prm, plus):
    return phi_env_np(kind, t, lo1, hi1, lo2, hi2, prm, plus)


def _dp_sup_np(x, fx, lo1, hi1, lo2, hi2, kind, prm, plus):
    n = x.shape[0]
    best = np.full(n, -np.inf)
    prev = np.zeros(n, dtype=np.int64)
    best[0] = 0.0
    for j in range(1, n):
        # ranges over [x[i], x[j]] for i = 0..j-1: suffix min/max of cells i..j-1
        l1 = np.minimum.accumulate(lo1[:j][::-1])[::-1]
        h1 = np.maximum.accumulate(hi1[:j][::-1])[::-1]
        l2 = np.minimum.accumulate(lo2[:j][::-1])[::-1]
        h2 = np.maximum.accumulate(hi2[:j][::-1])[::-1]
        ell = x[j] - x[:j]
        t = np.abs(fx[:j] - fx[j]) / ell
        v = best[:j] + phi_env_np(kind, t, l1, h1, l2, h2, prm, plus) * ell
        # ties resolve to the largest i, matching the descending scan above
        i = j - 1 - int(np.argmax(v[::-1]))
        best[j] = v[i]
        prev[j] = i
    return best, prev


def env_many(kind, t, lo1, hi1, lo2, hi2, prm, plus, use_numba=None):
    """Elementwise interval envelope for arrays of arguments."""
    use = USE_NUMBA if use_numba is None else use_numba
    args = [np.ascontiguousarray(a, dtype=float) for a in (t, lo1, hi1, lo2, hi2)]
    prm = np.ascontiguousarray(prm, dtype=float)
    if use and HAVE_NUMBA:
        return _env_many_nb(*args, prm, bool(plus), _ENV_NB[int(kind)])
    return _env_many_np(int(kind), *args, prm, bool(plus))


def dp_sup(x, fx, lo1, hi1, lo2, hi2, kind, prm, plus, use_numba=None):
    """Maximize the partition sum over all partitions with nodes in ``x``.

    Returns ``(best, prev)``: ``best[j]`` is the optimal sum over partitions
    of ``[x[0], x[j]]`` and ``prev`` the back-pointers of an optimal path.
    The first maximizer in the descending-``i`` scan wins, so coarse cells
    are only chosen when strictly better.
    """
    use = USE_NUMBA if use_numba is None else use_numba
    arrs = [np.ascontiguousarray(a, dtype=float) for a in (x, fx, lo1, hi1, lo2, hi2)]
    prm = np.ascontiguousarray(prm, dtype=float)
    if use and HAVE_NUMBA:
        return _dp_sup_nb(*arrs, prm, bool(plus), _ENV_NB[int(kind)])
    return _dp_sup_np(*arrs, int(kind), prm, bool(plus))


def backtrack(prev, last=None):
    """Node indices of the optimal path ending at ``last`` (default: final node)."""
    j = len(prev) - 1 if last is None else last
    path = [j]
    while j > 0:
        j = int(prev[j])
        path.append(j)
    return path[::-1]
