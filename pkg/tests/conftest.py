import numpy as np
import pytest
from scipy.stats import unitary_group

from qhtcontrol.core import IDENTITY, PAULIS


def random_density(rng, pure=False):
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    if not pure:
        v *= rng.uniform() ** (1 / 3)
    return 0.5 * (IDENTITY + sum(c * s for c, s in zip(v, PAULIS)))


def random_hermitian(rng, scale=1.0):
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return scale * 0.5 * (A + A.conj().T)


def random_unitary(rng):
    return unitary_group.rvs(2, random_state=rng)


@pytest.fixture
def rng():
    return np.random.default_rng(20231016)
