"""Input validation helpers in the style of ``sklearn.utils.validation``.

Each ``check_*`` function returns a normalized array or raises ``ValueError``.
"""

import numpy as np

HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-12
PSD_ATOL = 1e-10
BLOCH_ATOL = 1e-10


def check_square_2x2(A, name="matrix"):
    A = np.asarray(A, dtype=complex)
    if A.shape != (2, 2):
        raise ValueError(f"{name} must have shape (2, 2), got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def check_hermitian(A, name="operator", atol=HERMITIAN_ATOL):
    A = check_square_2x2(A, name)
    if not np.allclose(A, A.conj().T, rtol=0, atol=atol):
        raise ValueError(f"{name} is not Hermitian")
    return A


def check_density_matrix(rho, name="rho", atol=TRACE_ATOL, psd_atol=PSD_ATOL):
    rho = check_hermitian(rho, name=name, atol=atol)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol:
        raise ValueError(f"{name} must have unit trace, got {tr!r}")
    if np.linalg.eigvalsh(rho).min() < -psd_atol:
        raise ValueError(f"{name} is not positive semidefinite")
    return rho


def check_bloch_vector(r, atol=BLOCH_ATOL):
    r = np.asarray(r, dtype=float)
    if r.shape != (3,) or not np.all(np.isfinite(r)):
        raise ValueError(f"Bloch vector must be 3 finite reals, got {r!r}")
    if r @ r > 1.0 + atol:
        raise ValueError(f"non-physical Bloch vector with |r| = {np.sqrt(r @ r):.6g} > 1")
    return r


def check_controls(controls, n_channels, n_slices, name="controls"):
    """Validate a (K, N) real control field."""
    u = np.asarray(controls, dtype=float)
    if u.ndim != 2 or u.shape != (n_channels, n_slices):
        raise ValueError(
            f"{name} must have shape ({n_channels}, {n_slices}), got {np.shape(controls)}"
        )
    if not np.all(np.isfinite(u)):
        raise ValueError(f"{name} contains non-finite entries")
    return u


def check_weights(weights, n):
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"expected {n} weights, got shape {w.shape}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")
    return w
