import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rieszvar.errors import NoModulus, SpecError, Unsupported
from rieszvar.profiles import (
    ANALYTIC_REGISTRY,
    Analytic,
    Constant,
    PiecewiseLinear,
    profile_from_dict,
)

knots_values = st.integers(2, 9).flatmap(lambda n: st.tuples(
    st.lists(st.floats(0, 1), min_size=n, max_size=n, unique=True),
    st.lists(st.floats(-5, 5), min_size=n, max_size=n)))


@given(kv=knots_values, a=st.floats(-0.2, 1.2), b=st.floats(-0.2, 1.2))
def test_piecewise_linear_range_is_exact(kv, a, b):
    knots, values = kv
    order = np.argsort(knots)
    p = PiecewiseLinear(np.asarray(knots)[order], np.asarray(values)[order])
    l, r = min(a, b), max(a, b)
    xs = np.unique(np.concatenate([np.linspace(l, r, 201), p.knots[(p.knots >= l) & (p.knots <= r)]]))
    lo, hi = p.range(l, r)
    assert lo == pytest.approx(np.min(p(xs)), abs=1e-12)
    assert hi == pytest.approx(np.max(p(xs)), abs=1e-12)


def test_range_vectorized_and_scalar_shapes():
    p = PiecewiseLinear([0, 0.5, 1], [1, 3, 2])
    lo, hi = p.range(np.array([0.0, 0.2]), np.array([0.4, 1.0]))
    assert lo.shape == (2,) and hi.tolist() == pytest.approx([2.6, 3.0])
    lo, hi = p.range(0.6, 0.7)
    assert np.ndim(lo) == 0 and float(hi) == pytest.approx(2.8)


def test_constant_profile():
    c = Constant(2.5)
    assert c(0.3) == 2.5
    assert c.range(0, 1) == (2.5, 2.5)
    assert c.is_constant and c.lipschitz == 0.0
    with pytest.raises(Unsupported):
        Constant(float("inf"))


@pytest.mark.parametrize("knots,values", [([0, 0], [1, 2]), ([1, 0], [1, 2]), ([0, 1], [1])])
def test_piecewise_linear_validation(knots, values):
    with pytest.raises(SpecError):
        PiecewiseLinear(knots, values)


def test_analytic_segments_give_exact_range():
    p = ANALYTIC_REGISTRY["inverse_log"]()
    lo, hi = p.range(0.0, 0.25)
    assert lo == 1.0
    assert hi == pytest.approx(1 + 1 / np.log(4))


def test_analytic_modulus_range_brackets():
    f = lambda x: np.sin(7 * x)
    p = Analytic(f, modulus=lambda r: 7 * r)
    lo, hi = p.range(0.0, 1.0)
    assert hi == pytest.approx(1.0, abs=1e-8)
    assert lo == pytest.approx(-1.0, abs=1e-8)


def test_analytic_without_metadata_cannot_certify():
    p = Analytic(lambda x: x ** 2)
    with pytest.raises(NoModulus):
        p.range(0, 1)


def test_holder_power_rejects_exponent_above_one():
    with pytest.raises(SpecError):
        ANALYTIC_REGISTRY["holder_power"](alpha=1.5)


def test_smooth_bump_plateaus():
    p = ANALYTIC_REGISTRY["smooth_bump"]()
    assert p(0.5) == 1.0 and p(0.0) == 2.0 and p(0.3) == 2.0
    assert 1.0 < p(0.37) < 2.0


@pytest.mark.parametrize("profile", [
    Constant(1.5),
    PiecewiseLinear([0, 0.3, 1], [1, 2, 1.5]),
    ANALYTIC_REGISTRY["holder_power"](center=0.5, coef=2.0, alpha=0.5),
])
def test_profile_json_round_trip(profile):
    back = profile_from_dict(profile.to_dict())
    xs = np.linspace(0, 1, 11)
    np.testing.assert_array_equal(np.asarray(back(xs)) * np.ones(11), np.asarray(profile(xs)) * np.ones(11))


def test_profile_from_dict_errors_name_the_field():
    with pytest.raises(SpecError, match="p.type"):
        profile_from_dict({"type": "spline"}, "p")
    with pytest.raises(SpecError, match="p.name"):
        profile_from_dict({"type": "analytic", "name": "nope"}, "p")
    with pytest.raises(SpecError, match="missing field 'knots'"):
        profile_from_dict({"type": "piecewise_linear", "values": [1]}, "p")
    assert profile_from_dict(3).value == 3.0
