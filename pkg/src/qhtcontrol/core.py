"""Single-qubit operators, Bloch vectors and Lindblad generators.

Superoperators act on column-stacked density matrices, so that
``vec(A X B) = kron(B.T, A) @ vec(X)``.  With this convention the
Hamiltonian ``H = sigma_z`` rotates the Bloch vector counter-clockwise about
+z at angular frequency 2, i.e. ``d<sigma_y>/dt = +2 <sigma_x>``.

Units: hbar = 1 and the signal field magnitude sets the frequency unit, so
times, rates and detunings are all dimensionless.
"""

from dataclasses import dataclass

import numpy as np

from .validation import check_bloch_vector, check_density_matrix, check_hermitian

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

# Decay channel toward |0> (the +z pole); SIGMA_PLUS is its adjoint.
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def projector(ket):
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


# written out so that the Bloch coordinates are exact
RHO_PLUS = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)
RHO_MINUS = 0.5 * np.array([[1, -1], [-1, 1]], dtype=complex)


@dataclass(frozen=True, eq=False)
class CollapseOperator:
    """A Lindblad jump operator with its rate kept separate.

    The dissipator contribution is ``rate * (L rho L^+ - {L^+ L, rho}/2)``,
    so ``CollapseOperator(sigma_z, gamma / 2)`` is the jump operator
    ``sqrt(gamma/2) sigma_z``.
    """

    operator: np.ndarray
    rate: float = 1.0

    def __post_init__(self):
        op = np.asarray(self.operator, dtype=complex)
        if op.shape != (2, 2):
            raise ValueError(f"collapse operator must be 2x2, got shape {op.shape}")
        if not np.isfinite(self.rate) or self.rate < 0:
            raise ValueError(f"collapse rate must be finite and >= 0, got {self.rate}")
        object.__setattr__(self, "operator", op)
        object.__setattr__(self, "rate", float(self.rate))


def vec(rho):
    """Column-stack a (..., 2, 2) array into (..., 4)."""
    rho = np.asarray(rho)
    return np.swapaxes(rho, -1, -2).reshape(rho.shape[:-2] + (4,))


def unvec(v):
    v = np.asarray(v)
    return np.swapaxes(v.reshape(v.shape[:-1] + (2, 2)), -1, -2)


def left_superop(A):
    """Superoperator of X -> A X."""
    return np.kron(IDENTITY, A)


def right_superop(B):
    """Superoperator of X -> X B."""
    return np.kron(np.asarray(B).T, IDENTITY)


def commutator_superop(H):
    """Superoperator of X -> [H, X]."""
    return left_superop(H) - right_superop(H)


def dissipator(collapse):
    L = collapse.operator
    LdL = L.conj().T @ L
    D = np.kron(L.conj(), L) - 0.5 * (left_superop(LdL) + right_superop(LdL))
    return collapse.rate * D


def lindblad_generator(H, collapses=()):
    """Build the 4x4 generator of ``-i[H, rho] + sum_k D[L_k](rho)``."""
    H = check_hermitian(H, name="H")
    L = -1j * commutator_superop(H)
    for c in collapses:
        if not isinstance(c, CollapseOperator):
            raise TypeError("collapses must be CollapseOperator instances")
        L = L + dissipator(c)
    return L


def control_generator_term(Hc):
    """Derivative of the generator with respect to a control amplitude.

    Returns ``-i Hc^x``; generators are affine in the controls, so
    ``lindblad_generator(H + u Hc, c) == lindblad_generator(H, c) + u * this``.
    """
    Hc = check_hermitian(Hc, name="Hc")
    return -1j * commutator_superop(Hc)


def apply_superop(S, rho):
    return unvec(np.asarray(S) @ vec(rho))


def bloch_from_density(rho):
    rho = check_density_matrix(rho)
    return np.array([np.real(np.trace(rho @ s)) for s in PAULIS])


def density_from_bloch(r):
    x, y, z = check_bloch_vector(r)
    return 0.5 * (IDENTITY + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z)


def bloch_vectors(rhos):
    """Vectorized Bloch coordinates of a stack of density matrices (no checks)."""
    rhos = np.asarray(rhos)
    x = 2.0 * rhos[..., 0, 1].real
    y = -2.0 * rhos[..., 0, 1].imag
    z = (rhos[..., 0, 0] - rhos[..., 1, 1]).real
    return np.stack([x, y, z], axis=-1)


# Unitary change of basis from column-stacked vec(rho) to Pauli coordinates
# (tr(rho)/sqrt2, x/sqrt2, y/sqrt2, z/sqrt2).  Hermiticity-preserving
# superoperators are real in this basis.
PAULI_BASIS = np.stack([vec(s) for s in (IDENTITY,) + PAULIS], axis=1) / np.sqrt(2)


def to_pauli_basis(S):
    """Express column-stacked superoperators (..., 4, 4) in the Pauli basis.

    The result is real whenever ``S`` preserves Hermiticity; the imaginary
    part is discarded.
    """
    P = PAULI_BASIS
    return np.real(P.conj().T @ np.asarray(S) @ P)


def from_pauli_basis(R):
    P = PAULI_BASIS
    return P @ np.asarray(R, dtype=complex) @ P.conj().T


def pauli_coordinates(rho):
    """Real 4-vector ``P^+ vec(rho)`` for a (stack of) Hermitian matrices."""
    return np.real(vec(rho) @ PAULI_BASIS.conj())


def density_from_pauli(r):
    return unvec(np.asarray(r) @ PAULI_BASIS.T)


# The propagation engine carries states as s = (tr rho, <sx>, <sy>, <sz>),
# i.e. sqrt(2) times the Pauli coordinates.  Superoperators are unchanged by
# this rescaling (it is a similarity transform by a multiple of identity), and
# the Bloch vector of |+> stays exactly (1, 0, 0).

def pauli_expectations(rho):
    """``(tr rho, tr(rho sx), tr(rho sy), tr(rho sz))`` for a stack of Hermitian matrices."""
    rho = np.asarray(rho)
    a, b = rho[..., 0, 0].real, rho[..., 1, 1].real
    off = rho[..., 0, 1]
    return np.stack([a + b, 2.0 * off.real, -2.0 * off.imag, a - b], axis=-1)


def density_from_expectations(s):
    """Inverse of :func:`pauli_expectations`: ``(s0 I + s . sigma) / 2``."""
    s = np.asarray(s)
    rho = np.empty(s.shape[:-1] + (2, 2), dtype=complex)
    rho[..., 0, 0] = 0.5 * (s[..., 0] + s[..., 3])
    rho[..., 1, 1] = 0.5 * (s[..., 0] - s[..., 3])
    rho[..., 0, 1] = 0.5 * (s[..., 1] - 1j * s[..., 2])
    rho[..., 1, 0] = 0.5 * (s[..., 1] + 1j * s[..., 2])
    return rho
