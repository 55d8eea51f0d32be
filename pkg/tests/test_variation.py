import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from rieszvar.bvfunc import BVFunction, Partition, PiecewisePoly
from rieszvar.phi import DoublePhase, Orlicz, OrliczTerm, Power, Side, VariableExponent
from rieszvar.profiles import ANALYTIC_REGISTRY, PiecewiseLinear
from rieszvar.variation import (
    BUDGET_EXHAUSTED,
    CONVERGED,
    DIVERGENT,
    NormResult,
    VariationEstimate,
    essential_variation_grid,
    limsup_norm,
    limsup_variation,
    lphi_modular,
    lphi_norm,
    luxemburg_norm,
    rbv_norm,
    representation_functional,
    sup_variation,
    variation_on_partition,
)

from conftest import random_pl

ID = BVFunction((0.0, 1.0), 0.0, PiecewisePoly.constant(0, 1, 1.0))
PHI52 = Power(2, weight=PiecewiseLinear([0, 1], [1, 2]))
CHI = BVFunction((0.0, 0.5), 0.0, None, [(0.0, 1.0)])
PHI54 = VariableExponent(ANALYTIC_REGISTRY["inverse_log"](), domain=(0.0, 0.5))
SQUARE = Power(2)


def pl(x, v, atoms=()):
    return BVFunction.piecewise_linear(np.asarray(x, float), np.asarray(v, float), atoms=atoms)


# variation_on_partition ------------------------------------------------------

def test_partition_sum_single_interval():
    assert variation_on_partition(PHI52, ID, Partition([0, 1]), Side.PLUS) == pytest.approx(2.0)
    # the lower envelope uses min weight 1
    assert variation_on_partition(PHI52, ID, Partition([0, 1]), Side.MINUS) == pytest.approx(1.0)


def test_partition_sum_of_constant_is_zero():
    f = BVFunction((0, 1), 3.5)
    for P in (Partition([0, 1]), Partition.uniform(0, 1, 7)):
        assert variation_on_partition(PHI52, f, P) == 0.0


def test_partition_sum_halves():
    assert variation_on_partition(SQUARE, ID, Partition([0, 0.5, 1])) == pytest.approx(1.0)


def test_partition_must_cover_interval():
    with pytest.raises(Exception):
        variation_on_partition(SQUARE, ID, Partition([0, 0.5]))


# sup variation -----------------------------------------------------------------

def test_sup_variation_example_weighted_square():
    est = sup_variation(PHI52, ID)
    assert est.value == pytest.approx(2.0, abs=1e-12)
    assert est.status == CONVERGED
    np.testing.assert_array_equal(est.partition_used.points, [0.0, 1.0])


def test_sup_variation_x_independent_square():
    est = sup_variation(SQUARE, ID)
    assert est.value == pytest.approx(1.0, rel=1e-12)


def test_sup_variation_constant_is_zero():
    est = sup_variation(PHI52, BVFunction((0, 1), -2.0))
    assert est.value == 0.0 and est.status == CONVERGED


def test_sup_variation_jump_in_superlinear_phi_diverges():
    f = pl([0, 1], [0, 1], atoms=[(0.5, 1.0)])
    est = sup_variation(SQUARE, f)
    assert est.status == DIVERGENT and est.value == math.inf


def test_sup_variation_mesh_values_refine():
    est = sup_variation(SQUARE, pl([0, 0.3, 1], [0, 1, -1]), grid_n=17, refine_rounds=3)
    hs = [h for h, _ in est.mesh_values]
    assert all(h1 > h2 for h1, h2 in zip(hs, hs[1:]))
    vs = [v for _, v in est.mesh_values]
    assert all(v2 >= v1 * (1 - 1e-14) for v1, v2 in zip(vs, vs[1:]))


# limsup variation --------------------------------------------------------------

def test_limsup_weighted_square():
    est = limsup_variation(PHI52, ID)
    assert est.value == pytest.approx(1.5, abs=1e-3)
    assert est.is_finite


def test_limsup_jump_at_inverse_log_singularity():
    up = limsup_variation(PHI54, CHI, Side.PLUS)
    down = limsup_variation(PHI54, CHI, Side.MINUS)
    assert up.value == pytest.approx(math.e, abs=1e-3)
    assert down.value == pytest.approx(1.0, abs=1e-3)


def test_limsup_parabola():
    f = BVFunction((0, 1), 0.0, PiecewisePoly([0, 1], [[0, 2]]))
    est = limsup_variation(SQUARE, f)
    assert est.value == pytest.approx(4 / 3, abs=1e-4)


def test_limsup_status_values():
    assert limsup_variation(SQUARE, ID).status in (CONVERGED, BUDGET_EXHAUSTED)
    est = limsup_variation(SQUARE, pl([0, 1], [0, 0], atoms=[(0.5, 1.0)]))
    assert est.status == DIVERGENT and est.value == math.inf


def test_estimate_round_trip():
    est = sup_variation(PHI52, ID)
    back = VariationEstimate.from_dict(est.to_dict())
    assert back.value == est.value and back.status == est.status
    np.testing.assert_array_equal(back.partition_used.points, est.partition_used.points)
    jump = pl([0, 1], [0, 0], atoms=[(0.5, 1.0)])
    inf = VariationEstimate.from_dict(limsup_variation(SQUARE, jump).to_dict())
    assert inf.value == math.inf and inf.status == DIVERGENT


# representation ------------------------------------------------------------------

def test_representation_linear_phi_is_total_variation(rng):
    phi = Orlicz([OrliczTerm("power", 1, 1)])
    for _ in range(5):
        f = random_pl(rng, atom_locs=sorted(rng.uniform(0.05, 0.95, 2)))
        assert representation_functional(phi, f) == pytest.approx(f.total_variation(), rel=1e-9)


def test_representation_square_of_identity():
    assert representation_functional(SQUARE, ID) == pytest.approx(1.0, rel=1e-12)


def test_representation_exponent_plateau():
    phi = VariableExponent(ANALYTIC_REGISTRY["smooth_bump"]())
    f = BVFunction((0, 1), 0.0, PiecewisePoly.constant(0, 1, 1.0), [(0.5, 1.0)])
    assert representation_functional(phi, f) == pytest.approx(2.0, abs=1e-9)


def test_representation_infinite_for_atom_with_superlinear_growth():
    f = pl([0, 1], [0, 1], atoms=[(0.5, 1.0)])
    assert representation_functional(SQUARE, f) == math.inf


def test_representation_atom_where_weight_vanishes_sees_linear_phase():
    a = PiecewiseLinear([0, 0.5, 1], [1, 0, 1])
    f = pl([0, 1], [0, 1], atoms=[(0.5, 1.0)])
    # φ'_∞ = 1 where a = 0
    exact = integrate.quad(lambda x: 1 + a(x), 0, 1, points=[0.5])[0] + 1.0
    assert representation_functional(DoublePhase(2.0, a), f) == pytest.approx(exact, rel=1e-9)


# norms ------------------------------------------------------------------------------

def test_norm_of_constant_is_zero():
    assert rbv_norm(SQUARE, BVFunction((0, 1), 4.0)).value == 0.0


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_norm_of_identity_under_power(p):
    res = rbv_norm(Power(p), ID)
    assert res.value == pytest.approx(1.0, rel=1e-8)
    assert res.modular_at_value <= 1 + 1e-8


def test_norm_is_homogeneous(rng):
    phi = DoublePhase(1.5, PiecewiseLinear([0, 1], [0.2, 1.0]))
    f = random_pl(rng)
    n1 = rbv_norm(phi, f).value
    n2 = rbv_norm(phi, f.scaled(2.0)).value
    assert n2 == pytest.approx(2 * n1, rel=1e-7)


def test_norm_infinite_when_modular_never_small():
    f = pl([0, 1], [0, 1], atoms=[(0.5, 1.0)])
    assert rbv_norm(SQUARE, f).value == math.inf


def test_norm_result_round_trip():
    res = rbv_norm(Power(2), ID)
    assert NormResult.from_dict(res.to_dict()) == res


def test_lphi_zero_and_unit():
    zero = PiecewisePoly.constant(0, 1, 0.0)
    assert lphi_modular(SQUARE, zero) == 0.0
    assert lphi_norm(SQUARE, zero).value == 0.0
    one = PiecewisePoly.constant(0, 1, 1.0)
    assert lphi_modular(SQUARE, one) == pytest.approx(1.0, rel=1e-12)
    assert lphi_norm(SQUARE, one).value == pytest.approx(1.0, rel=1e-8)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 4.0])
def test_lphi_norm_matches_p_norm(p):
    g = PiecewisePoly([0, 0.3, 1], [[1.0, -2.0], [0.4, 0.0, 3.0]])
    oracle = integrate.quad(lambda x: abs(g(x)) ** p, 0, 1, points=[0.3], epsabs=1e-14,
                            epsrel=1e-13, limit=200)[0] ** (1 / p)
    assert lphi_norm(Power(p), g).value == pytest.approx(oracle, rel=1e-6)


def test_lphi_modular_accepts_callable():
    val = lphi_modular(SQUARE, np.sin, points=[0.0, 1.0])
    assert val == pytest.approx(0.5 - math.sin(2) / 4, rel=1e-9)


# grid oracle ----------------------------------------------------------------------------

def test_essential_variation_examples():
    assert essential_variation_grid(ID, 33) == pytest.approx(1.0, rel=1e-14)
    assert essential_variation_grid(CHI, 33) == pytest.approx(1.0, rel=1e-14)
    assert essential_variation_grid(np.sin, 4097, (0.0, 2 * math.pi)) == pytest.approx(4.0, abs=1e-4)
    with pytest.raises(ValueError):
        essential_variation_grid(ID, 1)


# invariants -----------------------------------------------------------------------------

CONVEX_FAMILIES = [
    Power(1.5),
    Power(2),
    Orlicz([OrliczTerm("power", 1, 1), OrliczTerm("power", 1, 3)]),
]


def _ac(seed, n_knots=(3, 6)):
    return random_pl(np.random.default_rng(seed), n_knots=n_knots)


@settings(max_examples=10)
@given(seed=st.integers(0, 10 ** 6), k=st.integers(0, 2))
def test_lower_upper_sup_ordering(seed, k):
    rng = np.random.default_rng(seed)
    a = PiecewiseLinear(np.linspace(0, 1, 4), rng.uniform(0, 1, 4))
    phi = [DoublePhase(1.5, a), VariableExponent(PiecewiseLinear([0, 1], [1.2, 2.2])),
           Power(2, weight=PiecewiseLinear([0, 1], [0.5, 2.0]))][k]
    f = random_pl(rng)
    lo = limsup_variation(phi, f, Side.MINUS).value
    up = limsup_variation(phi, f, Side.PLUS).value
    v = sup_variation(phi, f).value
    assert lo <= up + 1e-4 * (1 + up)
    assert up <= v + 1e-4 * (1 + v)


@settings(max_examples=10)
@given(seed=st.integers(0, 10 ** 6), k=st.integers(0, 2))
def test_sup_equals_limsup_for_x_independent_phi(seed, k):
    phi, f = CONVEX_FAMILIES[k], _ac(seed)
    v = sup_variation(phi, f).value
    vbar = limsup_variation(phi, f).value
    assert abs(v - vbar) <= 1e-4 * (1 + v)


@settings(max_examples=8)
@given(seed=st.integers(0, 10 ** 6))
def test_upper_and_lower_agree_for_regular_exponent(seed):
    rng = np.random.default_rng(seed)
    phi = VariableExponent(ANALYTIC_REGISTRY["smooth_bump"]())
    # atoms only where p = 1, so both sides stay finite
    f = random_pl(rng, atom_locs=[float(rng.uniform(0.42, 0.58))])
    up = limsup_variation(phi, f, Side.PLUS).value
    lo = limsup_variation(phi, f, Side.MINUS).value
    assert abs(up - lo) <= 1e-3 * max(1.0, up)


@settings(max_examples=10)
@given(seed=st.integers(0, 10 ** 6))
def test_equivalent_phi_sandwich(seed):
    f = _ac(seed)
    psi = Power(2, weight=PiecewiseLinear([0, 1], [4, 4]))
    extra = f.mandatory_points()
    v = lambda phi, g: sup_variation(phi, g, extra_points=extra).value  # noqa: E731
    mid = v(SQUARE, f)
    assert v(psi, f.scaled(0.5)) <= mid * (1 + 1e-12) + 1e-15
    assert mid <= v(psi, f.scaled(2.0)) * (1 + 1e-12) + 1e-15


def _shared_grid_variation(phi, fs):
    extra = np.unique(np.concatenate([g.mandatory_points() for g in fs]))
    return lambda g: sup_variation(phi, g, grid_n=65, refine_rounds=1, extra_points=extra).value


@settings(max_examples=10)
@given(seed=st.integers(0, 10 ** 6), theta=st.floats(0.05, 0.95))
def test_modular_axioms(seed, theta):
    rng = np.random.default_rng(seed)
    phi = DoublePhase(1.7, PiecewiseLinear([0, 0.5, 1], rng.uniform(0, 2, 3)))
    f, g = random_pl(rng), random_pl(rng)
    h = f.scaled(theta) + g.scaled(1 - theta)
    V = _shared_grid_variation(phi, [f, g, h])
    assert V(f.scaled(0.0)) == 0.0
    assert V(-f) == pytest.approx(V(f), rel=1e-14)
    lams = [V(f.scaled(lam)) for lam in (0.1, 0.5, 1.0, 2.0, 5.0)]
    assert all(b >= a for a, b in zip(lams, lams[1:]))
    assert V(h) <= theta * V(f) + (1 - theta) * V(g) + 1e-12


@settings(max_examples=10)
@given(seed=st.integers(0, 10 ** 6), scale=st.floats(0.1, 5.0))
def test_unit_ball_implications(seed, scale):
    phi = Power(1.5, weight=PiecewiseLinear([0, 1], [1.0, 3.0]))
    f = _ac(seed).scaled(scale)
    modular = lambda g: sup_variation(phi, g, 129, 1).value  # noqa: E731
    norm = luxemburg_norm(modular, f).value
    rho = modular(f)
    if norm < 1:
        assert rho <= 1 + 1e-8
    elif norm > 1:
        # convex φ gives β = 1
        assert rho >= norm * (1 - 1e-7)


@settings(max_examples=10)
@given(seed=st.integers(0, 10 ** 6))
def test_derivative_norm_bounded_by_variation_norm(seed):
    rng = np.random.default_rng(seed)
    phi = DoublePhase(1.5, PiecewiseLinear([0, 0.5, 1], rng.uniform(0, 2, 3)))
    f = random_pl(rng)
    assert lphi_norm(phi, f.density).value <= rbv_norm(phi, f).value + 1e-6


def _linf_constant(phi_inv, length=1.0):
    # sup_ℓ ℓ φ⁻¹(1/ℓ) over ℓ in (0, |I|]
    ls = np.geomspace(1e-6, length, 400)
    return max(l * phi_inv(1 / l) for l in ls)


@pytest.mark.parametrize("phi,phi_inv", [
    (Power(2), math.sqrt),
    (Power(1.5), lambda s: s ** (1 / 1.5)),
    (CONVEX_FAMILIES[2], lambda s: optimize.brentq(lambda t: t + t ** 3 - s, 0, max(1.0, s))),
])
def test_sup_norm_bounded_by_variation_norm(phi, phi_inv):
    C = _linf_constant(phi_inv)
    ratios = []
    for seed in range(8):
        f = _ac(seed)
        f = f - BVFunction((0, 1), float(f(0.0)))
        grid = np.linspace(0, 1, 2001)
        ratios.append(np.max(np.abs(f(grid))) / rbv_norm(phi, f).value)
    assert max(ratios) <= C * (1 + 1e-6)


def test_scaled_counterexample_ratio_grows():
    phi = VariableExponent(PiecewiseLinear([0, 2, 3], [2, 2, 3]), domain=(0, 3))
    ratios = []
    for alpha in (10, 100, 1000):
        f = pl([0, 1, 3], [0, alpha, alpha])
        up = sup_variation(phi, f.scaled(0.5), grid_n=65, refine_rounds=2).value
        down = sup_variation(phi, f, grid_n=65, refine_rounds=2, side=Side.MINUS).value
        ratios.append(up / down)
    assert ratios[0] < ratios[1] < ratios[2]


def test_limsup_and_sup_norms_are_equivalent():
    phi = DoublePhase(1.5, PiecewiseLinear([0, 1], [0.0, 2.0]))
    ratios = []
    for seed in range(4):
        f = _ac(100 + seed)
        ratios.append(limsup_norm(phi, f, mesh_rounds=8).value / rbv_norm(phi, f).value)
    assert max(ratios) <= 1 + 1e-4
    assert min(ratios) >= 0.5
