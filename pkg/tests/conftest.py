import numpy as np
import pytest
from hypothesis import settings

from rieszvar.bvfunc import BVFunction

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("default")


def random_pl(rng, interval=(0.0, 1.0), n_knots=(3, 7), atom_locs=(), scale=1.0):
    """Random piecewise-linear BV function with atoms at the given locations."""
    a, b = interval
    k = int(rng.integers(n_knots[0], n_knots[1] + 1))
    inner = np.sort(rng.uniform(a, b, k - 2))
    x = np.unique(np.concatenate([[a, b], inner]))
    v = scale * rng.normal(size=x.size)
    atoms = [(float(c), float(scale * rng.choice([-1, 1]) * rng.uniform(0.2, 1.5)))
             for c in sorted(atom_locs)]
    return BVFunction.piecewise_linear(x, v, atoms=atoms)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
