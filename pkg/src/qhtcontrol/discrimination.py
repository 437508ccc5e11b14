"""Error probabilities for discriminating two qubit states."""

from dataclasses import dataclass

import numpy as np

from .core import IDENTITY, PAULIS, RHO_MINUS, RHO_PLUS, projector, KET_0, KET_1
from .validation import check_density_matrix, check_hermitian, check_weights

POVM_ATOL = 1e-10
DEGENERACY_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class Povm:
    """Two-outcome measurement; ``E0`` votes for hypothesis 0."""

    E0: np.ndarray
    E1: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        E0 = check_hermitian(self.E0, "E0", atol=POVM_ATOL)
        E1 = check_hermitian(self.E1, "E1", atol=POVM_ATOL)
        for name, E in (("E0", E0), ("E1", E1)):
            w = np.linalg.eigvalsh(E)
            if w.min() < -POVM_ATOL or w.max() > 1 + POVM_ATOL:
                raise ValueError(f"{name} eigenvalues must lie in [0, 1]")
        if not np.allclose(E0 + E1, IDENTITY, rtol=0, atol=POVM_ATOL):
            raise ValueError("POVM elements must sum to the identity")
        object.__setattr__(self, "E0", E0)
        object.__setattr__(self, "E1", E1)

    @classmethod
    def from_projector(cls, E1, degenerate=False):
        E1 = np.asarray(E1, dtype=complex)
        return cls(IDENTITY - E1, E1, degenerate)


@dataclass(frozen=True)
class Priors:
    pi0: float = 0.5
    pi1: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.pi0 <= 1.0 and 0.0 <= self.pi1 <= 1.0):
            raise ValueError("prior probabilities must lie in [0, 1]")
        if abs(self.pi0 + self.pi1 - 1.0) > 1e-12:
            raise ValueError("prior probabilities must sum to 1")


# Fixed local measurement onto |+> (accept H0) and |-> (accept H1).
PLUS_MINUS_POVM = Povm(RHO_PLUS, RHO_MINUS)
SYMMETRIC = Priors()


def _difference_bloch(rho0, rho1):
    """Split rho0 - rho1 = t I + v . sigma, returning (t, v)."""
    d = np.asarray(rho0) - np.asarray(rho1)
    t = 0.5 * np.trace(d).real
    v = np.array([0.5 * np.trace(d @ s).real for s in PAULIS])
    return t, v


def trace_distance(rho0, rho1):
    """``||rho0 - rho1||_1 / 2`` from the closed-form 2x2 eigenvalues."""
    rho0 = check_density_matrix(rho0, "rho0")
    rho1 = check_density_matrix(rho1, "rho1")
    t, v = _difference_bloch(rho0, rho1)
    r = np.sqrt(v @ v)
    return float(min(1.0, 0.5 * (abs(t + r) + abs(t - r))))


def helstrom_error(rho0, rho1):
    """Minimum error probability over all measurements (equal priors)."""
    return 0.5 * (1.0 - trace_distance(rho0, rho1))


def fixed_local_error(rho0, rho1, povm=PLUS_MINUS_POVM, priors=SYMMETRIC):
    """Weighted misidentification probability ``pi0 tr(rho0 E1) + pi1 tr(rho1 E0)``."""
    rho0 = check_density_matrix(rho0, "rho0")
    rho1 = check_density_matrix(rho1, "rho1")
    if not isinstance(povm, Povm):
        raise TypeError("povm must be a Povm instance")
    p = priors.pi0 * np.trace(rho0 @ povm.E1).real + priors.pi1 * np.trace(rho1 @ povm.E0).real
    return float(p)


def hs_objective(rho0, rho1):
    """Hilbert-Schmidt distance ``tr[(rho0 - rho1)^2] / 2``.

    For qubits this equals the squared trace distance.
    """
    rho0 = check_density_matrix(rho0, "rho0")
    rho1 = check_density_matrix(rho1, "rho1")
    d = rho0 - rho1
    return float(0.5 * np.real(np.vdot(d, d)))


def helstrom_povm(rho0, rho1):
    """Projective measurement attaining the Helstrom bound.

    ``E1`` projects onto the negative eigenspace of ``rho0 - rho1``.  When the
    states coincide any measurement is optimal; the sigma_z projectors are
    returned with ``degenerate=True``.
    """
    rho0 = check_density_matrix(rho0, "rho0")
    rho1 = check_density_matrix(rho1, "rho1")
    _, v = _difference_bloch(rho0, rho1)
    r = np.sqrt(v @ v)
    if r <= DEGENERACY_ATOL:
        return Povm(projector(KET_0), projector(KET_1), degenerate=True)
    n = v / r
    E1 = 0.5 * (IDENTITY - n[0] * PAULIS[0] - n[1] * PAULIS[1] - n[2] * PAULIS[2])
    return Povm.from_projector(E1)


def averaged_error(errors, weights=None):
    """Weighted mean of per-detuning error probabilities (uniform by default)."""
    errors = np.asarray(errors, dtype=float)
    if errors.ndim != 1 or errors.size == 0:
        raise ValueError("errors must be a nonempty 1-D sequence")
    if weights is None:
        return float(errors.mean())
    if len(weights) != errors.size:
        raise ValueError(f"length mismatch: {errors.size} errors, {len(weights)} weights")
    w = check_weights(weights, errors.size)
    return float(w @ errors)
