import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rieszvar.bvfunc import BVFunction, Partition, PiecewisePoly, parse_xy_csv
from rieszvar.errors import OutOfDomain, SpecError
from rieszvar.variation import atom_neighbours, classical_variation

from conftest import random_pl

CHI = BVFunction((0.0, 0.5), 0.0, None, [(0.0, 1.0)])
ID = BVFunction((0.0, 1.0), 0.0, PiecewisePoly.constant(0, 1, 1.0))


def test_evaluate_examples():
    assert CHI.evaluate(0.0) == 0.0
    assert CHI.evaluate(0.3) == 1.0
    assert ID(0.5) == 0.5
    g = BVFunction((0, 1), 0, PiecewisePoly.constant(0, 1, 1.0), [(0.5, 1.0)])
    assert g(0.5) == 0.5
    assert g(0.5 + 1e-9) == pytest.approx(1.5 + 1e-9, abs=1e-15)


def test_evaluate_cubic_density_in_closed_form():
    # f' = 1 - 3x + x^3 on [0, 2]  ->  f = x - 1.5x^2 + x^4/4
    dens = PiecewisePoly([0, 2], [[1, -3, 0, 1]])
    f = BVFunction((0, 2), 0.25, dens)
    xs = np.linspace(0, 2, 9)
    np.testing.assert_allclose(f(xs), 0.25 + xs - 1.5 * xs ** 2 + xs ** 4 / 4, rtol=0, atol=1e-14)


def test_increment_examples():
    assert ID.increment((0.2, 0.7)) == pytest.approx(-0.5)
    const = BVFunction((0, 1), 3.0)
    assert const.increment((0.1, 0.9)) == 0.0
    for x0 in (0.5, 0.1, 1e-9):
        assert CHI.increment((0.0, x0)) == -1.0


def test_total_variation_examples():
    f = BVFunction((0, 1), 0, PiecewisePoly.constant(0, 1, 1.0), [(0.3, -2.0)])
    assert f.total_variation() == 3.0
    assert BVFunction((0, 1)).total_variation() == 0.0
    assert CHI.total_variation() == 1.0


def test_singular_mass_by_predicate():
    f = BVFunction((0, 1), 0, None, [(0.2, 1.0), (0.5, -2.0), (0.8, 0.5)])
    assert f.singular_mass() == 3.5
    assert f.singular_mass(lambda c: c > 0.4) == 2.5


def test_total_variation_splits_density_at_zeros():
    f = BVFunction.piecewise_linear([0, 1], [0, 0])  # trivial
    assert f.total_variation() == 0.0
    dens = PiecewisePoly([0, 1], [[-1, 2]])  # f' = 2x - 1, |f'| integrates to 1/2
    assert BVFunction((0, 1), 0, dens).total_variation() == pytest.approx(0.5, abs=1e-15)


@given(seed=st.integers(0, 10_000), xs=st.lists(st.floats(0, 1), min_size=3, max_size=3))
def test_increment_additivity(seed, xs):
    rng = np.random.default_rng(seed)
    f = random_pl(rng, atom_locs=rng.uniform(0, 1, 2).round(3))
    x, y, z = sorted(xs)
    lhs = f.increment((x, z))
    rhs = f.increment((x, y)) + f.increment((y, z))
    assert lhs == pytest.approx(rhs, abs=1e-12)


@given(seed=st.integers(0, 10_000))
def test_left_continuity_at_atoms(seed):
    rng = np.random.default_rng(seed)
    locs = np.sort(rng.choice(np.arange(1, 20) / 20, 3, replace=False))
    f = random_pl(rng, atom_locs=locs)
    scale = 1 + np.max(np.abs(f(np.linspace(0, 1, 101))))
    for c in locs:
        assert abs(f(c) - f(c - 1e-12)) <= 1e-9 * scale
        jump = dict(f.atoms)[c]
        assert f(c + 1e-12) - f(c) == pytest.approx(jump, abs=1e-9 * scale)


@given(seed=st.integers(0, 10_000))
def test_grid_variation_reaches_total_variation(seed):
    rng = np.random.default_rng(seed)
    f = random_pl(rng, atom_locs=rng.choice(np.arange(1, 10) / 10, 2, replace=False))
    base = np.union1d(f.mandatory_points(), atom_neighbours(f))
    for n in (9, 33, 129):
        grid = np.union1d(np.linspace(0, 1, n), base)
        assert classical_variation(f, grid) == pytest.approx(f.total_variation(), rel=1e-6)


def test_atom_validation():
    with pytest.raises(SpecError):
        BVFunction((0, 1), 0, None, [(0.5, 1.0), (0.2, 1.0)])
    with pytest.raises(SpecError):
        BVFunction((0, 1), 0, None, [(1.0, 1.0)])
    with pytest.raises(SpecError):
        BVFunction((0, 1), 0, None, [(-0.1, 1.0)])
    assert BVFunction((0, 1), 0, None, [(0.5, 0.0)]).atoms == []


def test_out_of_domain():
    with pytest.raises(OutOfDomain):
        ID(1.5)
    with pytest.raises(OutOfDomain):
        ID.increment((-0.1, 0.5))


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition([0.0, 0.5, 0.5, 1.0])
    with pytest.raises(ValueError):
        Partition([0.0])
    P = Partition.uniform(0, 1, 4)
    assert len(P) == 4 and P.mesh == 0.25 and P.intervals()[0] == (0.0, 0.25)


def test_scaling_and_algebra():
    f = BVFunction.piecewise_linear([0, 0.5, 1], [1, 2, 0], atoms=[(0.25, 0.5)])
    g = BVFunction.piecewise_linear([0, 0.3, 1], [0, -1, 1], atoms=[(0.75, -1.0)])
    xs = np.linspace(0, 1, 41)
    np.testing.assert_allclose((f * -2.5)(xs), -2.5 * f(xs))
    np.testing.assert_allclose((f / 4)(xs), f(xs) / 4)
    np.testing.assert_allclose((f + g)(xs), f(xs) + g(xs), atol=1e-14)
    np.testing.assert_allclose((f - g)(xs), f(xs) - g(xs), atol=1e-14)
    assert f.scaled(0.0).atoms == []


def test_json_round_trip():
    f = BVFunction((0, 2), 0.5, PiecewisePoly([0, 1, 2], [[1, 0.5], [0, 0, -1]]), [(0.0, 1.0), (1.5, -0.25)])
    back = BVFunction.from_dict(json.loads(json.dumps(f.to_dict())))
    xs = np.linspace(0, 2, 17)
    np.testing.assert_array_equal(back(xs), f(xs))


@pytest.mark.parametrize("doc,field", [
    ({"base": 0}, "function"),
    ({"interval": [0]}, "interval"),
    ({"interval": [0, 1], "atoms": [[0.5]]}, "atoms"),
    ({"interval": [0, 1], "density": {"type": "poly_pieces", "breakpoints": [0, 1], "coeffs": [[1, 2, 3, 4, 5]]}}, "coeffs"),
    ({"interval": [0, 1], "density": {"type": "spline"}}, "density.type"),
    ({"interval": [0, 1], "density": {"type": "sampled", "x": [0, 1]}}, "values"),
])
def test_from_dict_errors(doc, field):
    with pytest.raises(SpecError, match=field):
        BVFunction.from_dict(doc)


def test_from_samples_detects_jumps():
    x = np.linspace(0, 1, 11)
    v = 0.1 * x + (x > 0.45)
    f = BVFunction.from_samples(x, v)
    assert len(f.atoms) == 1
    c, h = f.atoms[0]
    assert c == pytest.approx(0.4) and h == pytest.approx(1.01)
    np.testing.assert_allclose(f(x), v, atol=1e-14)
    smooth = BVFunction.from_samples(x, v, detect_jumps=False)
    assert smooth.atoms == [] and smooth.total_variation() == pytest.approx(1.1)


def test_csv_parsing_and_diagnostics(tmp_path):
    x, v = parse_xy_csv("x,value\n0,1\n0.5,2\n1,0\n")
    assert x.tolist() == [0, 0.5, 1] and v.tolist() == [1, 2, 0]
    with pytest.raises(SpecError, match="line 1"):
        parse_xy_csv("t,y\n0,1\n")
    with pytest.raises(SpecError, match="line 3"):
        parse_xy_csv("x,value\n0,1\n0,2\n")
    with pytest.raises(SpecError, match="line 2"):
        parse_xy_csv("x,value\n0,abc\n")
    path = tmp_path / "s.csv"
    path.write_text("x,value\n0,0\n0.5,0.5\n1,0\n")
    f = BVFunction.from_csv(path)
    assert f(0.5) == 0.5 and f.total_variation() == 1.0
