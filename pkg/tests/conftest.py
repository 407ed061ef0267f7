import numpy as np
import pytest

from gpqubo import Hyperparams, make_grid


@pytest.fixture(scope="session")
def grid3():
    return make_grid(3, 3)


@pytest.fixture(scope="session")
def grid5():
    return make_grid(5, 5)


@pytest.fixture(scope="session")
def h_default():
    return Hyperparams(length_scale=1.0, sigma_f=1.0, sigma_n=0.1)


@pytest.fixture(scope="session")
def h_weak():
    """Weak-coupling configuration: nearest-neighbour correlation ~ 0.004.

    Pointwise diminishing returns of noisy-GP variance reduction is a
    conditional property; it holds (within 1e-9) in this regime but is
    genuinely violated at stronger coupling (see the dedicated test).
    """
    return Hyperparams(length_scale=0.3, sigma_f=1.0, sigma_n=0.1)


@pytest.fixture(scope="session")
def grid3_profiles_weak(grid3, h_weak):
    """Exhaustive per-subset variance profiles on the 3x3 grid (oracle side)."""
    from .oracles import subset_variance_profiles

    return subset_variance_profiles(grid3, h_weak)


def random_hyperparams(rng: np.random.Generator) -> Hyperparams:
    return Hyperparams(
        length_scale=float(rng.uniform(0.4, 2.5)),
        sigma_f=float(rng.uniform(0.5, 2.5)),
        sigma_n=float(rng.uniform(0.0, 0.8)),
    )


def random_domain(rng: np.random.Generator, max_points: int = 9, dim: int = 2):
    from gpqubo import Domain

    m = int(rng.integers(2, max_points + 1))
    return Domain(points=rng.uniform(0.0, 4.0, size=(m, dim)))
