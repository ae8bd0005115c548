import numpy as np
import pytest

from dvteleport.fock import DensityOperator, ModeSpace


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_density(rng, dims):
    """Ginibre-random density operator on the given mode dimensions."""
    n = int(np.prod(dims))
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    mat = g @ g.conj().T
    mat /= np.trace(mat).real
    return DensityOperator(ModeSpace(tuple(dims)), mat)


def random_qubit_density(rng):
    return random_density(rng, (2,))
