"""Batched matrix exponential for small dense matrices.

``scipy.linalg.expm`` handles stacks too, but loops per matrix; the
propagation code exponentiates thousands of 4x4 (or 8x8) generators per
objective evaluation, so the Pade approximant is evaluated on the whole
stack at once.
"""

import numpy as np

# Pade coefficients and 1-norm thresholds for degrees 3, 5, 7, 9, 13
# (Higham, "The scaling and squaring method for the matrix exponential
# revisited", SIAM J. Matrix Anal. Appl. 26, 2005).
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1,
          7: 9.504178996162932e-1, 9: 2.097847961257068, 13: 5.371920351148152}
_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}



class NonFiniteError(ValueError, FloatingPointError):
    """A NaN or infinity reached a numerical kernel."""

def _pade_uv(A, m):
    b = _COEFFS[m]
    ident = np.broadcast_to(np.eye(A.shape[-1], dtype=A.dtype), A.shape)
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
        V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
             + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
        return U, V
    powers = [ident, A2]
    for _ in range(m // 2 - 1):
        powers.append(powers[-1] @ A2)
    U = sum(b[2 * i + 1] * P for i, P in enumerate(powers))
    V = sum(b[2 * i] * P for i, P in enumerate(powers))
    return A @ U, V


def expm(A):
    """Matrix exponential of a square matrix or a stack of them.

    Scaling and squaring with a diagonal Pade approximant; the degree and the
    number of squarings are chosen from the largest 1-norm in the stack.
    Accurate to a few ulps relative for the well-conditioned generators used
    here.
    """
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError(f"expm expects square matrices, got shape {A.shape}")
    if not np.issubdtype(A.dtype, np.inexact):
        A = A.astype(float)
    if not np.all(np.isfinite(A)):
        raise NonFiniteError("expm input contains non-finite entries")
    if A.size == 0:
        return A.copy()
    norm = float(np.abs(A).sum(axis=-2).max())
    s = 0
    for m in (3, 5, 7, 9):
        if norm <= _THETA[m]:
            break
    else:
        m = 13
        if norm > _THETA[13]:
            s = int(np.ceil(np.log2(norm / _THETA[13])))
            A = A / 2.0 ** s
    U, V = _pade_uv(A, m)
    R = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R


def expm_frechet_block(A, E):
    """Frechet derivative of ``expm`` at ``A`` in direction ``E``.

    Uses ``expm([[A, E], [0, A]]) = [[e^A, L(A, E)], [0, e^A]]``.  Returns
    ``(e^A, L(A, E))``; both arguments may be stacks of the same shape.
    """
    A, E = np.broadcast_arrays(np.asarray(A), np.asarray(E))
    n = A.shape[-1]
    dtype = np.result_type(A, E, float)
    M = np.zeros(A.shape[:-2] + (2 * n, 2 * n), dtype=dtype)
    M[..., :n, :n] = A
    M[..., n:, n:] = A
    M[..., :n, n:] = E
    X = expm(M)
    return X[..., :n, :n], X[..., :n, n:]
