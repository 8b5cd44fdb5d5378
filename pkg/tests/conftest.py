import numpy as np
import pytest

from qcatransfer import SectorState


@pytest.fixture
def rng():
    return np.random.default_rng(20240809)


def random_density(n, rng, trace=1.0):
    """Random PSD complex matrix with the requested trace."""
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    rho *= trace / np.trace(rho).real
    return rho


def random_sector_state(n, rng, trace=1.0):
    return SectorState(random_density(n, rng, trace))
