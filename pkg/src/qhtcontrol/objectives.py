"""Discrimination objectives and their gradients with respect to the controls.

Two functionals of the final states are supported:

* ``"helstrom"`` -- maximize ``D = tr[(rho0 - rho1)^2] / 2``, which for a
  qubit equals the squared trace distance, so maximizing it minimizes the
  Helstrom error;
* ``"fixed_local"`` -- minimize ``P_e`` for a fixed POVM.

Either can be averaged over a set of detunings of the alternative
hypothesis (robust control).

Gradients are assembled in O(N) per hypothesis and detuning: one forward
sweep stores the states, one backward sweep propagates the cotangent of the
final state, and the slice derivative is contracted against the two.  In
``"exact"`` mode the contraction uses the adjoint Frechet derivative
``<W, L_A(E)> = <L_{A^T}(W), E>``, so each slice needs one 8x8 block
exponential no matter how many control channels there are.
"""

from dataclasses import dataclass

import numpy as np

from .core import pauli_expectations
from .discrimination import PLUS_MINUS_POVM, SYMMETRIC, Povm, Priors
from .linalg import expm, expm_frechet_block
from .propagation import chain_product, forward, slice_generators
from .validation import check_controls, check_weights

MEASURES = ("helstrom", "fixed_local")
GRADIENT_MODES = ("exact", "truncated")


def detuning_samples(window, n_samples):
    """Evenly spaced detunings over ``window`` with uniform weights."""
    lo, hi = map(float, window)
    if hi < lo:
        raise ValueError(f"detuning window bounds out of order: {window}")
    if n_samples < 1:
        raise ValueError("need at least one detuning sample")
    if hi == lo:
        return np.array([lo]), np.array([1.0])
    return np.linspace(lo, hi, n_samples), np.full(n_samples, 1.0 / n_samples)


@dataclass(frozen=True, eq=False)
class Objective:
    """What to optimize.

    ``detunings``/``weights`` switch on the robust average; ``None`` means the
    problem's own detuning only.
    """

    measure: str = "helstrom"
    povm: Povm = PLUS_MINUS_POVM
    priors: Priors = SYMMETRIC
    detunings: tuple = None
    weights: tuple = None

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ValueError(f"measure must be one of {MEASURES}, got {self.measure!r}")
        if self.detunings is not None:
            d = tuple(float(x) for x in np.atleast_1d(self.detunings))
            if not d:
                raise ValueError("robust objective needs at least one detuning sample")
            w = self.weights
            w = np.full(len(d), 1.0 / len(d)) if w is None else w
            object.__setattr__(self, "detunings", d)
            object.__setattr__(self, "weights", tuple(check_weights(w, len(d))))
        elif self.weights is not None:
            raise ValueError("weights given without detunings")

    @classmethod
    def for_problem(cls, problem, window=None, n_samples=21):
        """Objective matching the problem's measurement, optionally robust."""
        kw = dict(measure=problem.measurement, povm=problem.povm, priors=problem.priors)
        if window is not None:
            d, w = detuning_samples(window, n_samples)
            kw.update(detunings=tuple(d), weights=tuple(w))
        return cls(**kw)

    @property
    def robust(self):
        return self.detunings is not None

    @property
    def sense(self):
        """+1 when the value is maximized, -1 when it is minimized."""
        return 1.0 if self.measure == "helstrom" else -1.0

    def samples(self, problem):
        if self.robust:
            return np.asarray(self.detunings), np.asarray(self.weights)
        return np.array([problem.detuning]), np.array([1.0])


def _propagate(problem, u, detunings, trajectories=True):
    """Generators, propagators and states for H0 and each detuned H1.

    Batch index 0 is the null hypothesis; 1..S are the detuned alternatives.
    Without ``trajectories`` only the final states are formed, shape (B, 1, 4).
    """
    drift = np.stack([problem._drift_pauli(0)]
                     + [problem._drift_pauli(1, dw) for dw in detunings])
    R = slice_generators(drift, problem._controls_pauli, u)
    E = expm(problem.grid.dt * R)
    if trajectories:
        states = forward(E, problem._r_init)
    else:
        states = (chain_product(E) @ problem._r_init)[:, None, :]
    return R, E, states


def _terminal(objective, sT, weights):
    """Objective value and cotangents of the final states.

    States are ``s = (tr rho, <sx>, <sy>, <sz>)``, so
    ``tr[(rho0 - rho1)^2] = |s0 - s1|^2 / 2`` and ``tr(E rho) = e . s / 2``
    with ``e`` the same coordinates of ``E``.
    """
    s0, s1 = sT[0], sT[1:]
    if objective.measure == "helstrom":
        d = s0 - s1
        per_sample = 0.25 * np.einsum("si,si->s", d, d)
        a0 = 0.5 * (weights @ d)
        a1 = -0.5 * weights[:, None] * d
    else:
        e0 = 0.5 * pauli_expectations(objective.povm.E0)
        e1 = 0.5 * pauli_expectations(objective.povm.E1)
        pi0, pi1 = objective.priors.pi0, objective.priors.pi1
        per_sample = pi0 * (e1 @ s0) + pi1 * (s1 @ e0)
        a0 = pi0 * e1
        a1 = pi1 * weights[:, None] * e0[None, :]
    return float(weights @ per_sample), per_sample, np.vstack([a0[None, :], a1])


def _backward(E, a):
    """Cotangents ``lam[:, n]`` of the state after ``n`` slices."""
    n = E.shape[-3]
    lam = np.empty(E.shape[:-3] + (n + 1, 4))
    lam[:, n] = a
    x = a[..., None]
    Et = np.swapaxes(E, -1, -2)
    for i in range(n - 1, 0, -1):
        x = Et[:, i] @ x
        lam[:, i] = x[..., 0]
    return lam


def _gradient(problem, R, E, states, a, mode):
    dt = problem.grid.dt
    C = problem._controls_pauli
    lam = _backward(E, a)
    if mode == "exact":
        # W_n = L_{A_n^T}(lam_{n+1} r_n^T); grad_kn = dt <W_n, C_k>
        outer = lam[:, 1:, :, None] * states[:, :-1, None, :]
        At = np.swapaxes(dt * R, -1, -2)
        _, W = expm_frechet_block(At, outer)
        return dt * np.einsum("bnij,kij->kn", W, C)
    if mode == "truncated":
        # (dt C - dt^2/2 C R + dt^2/2 R C) applied to the post-slice state
        r_next = states[:, 1:, :, None]
        Cr = np.einsum("kij,bnjl->bknil", C, r_next)
        RCr = R[:, None] @ Cr
        CRr = np.einsum("kij,bnjl->bknil", C, R @ r_next)
        v = dt * Cr + 0.5 * dt ** 2 * (RCr - CRr)
        return np.einsum("bni,bkni->kn", lam[:, 1:], v[..., 0])
    raise ValueError(f"gradient mode must be one of {GRADIENT_MODES}, got {mode!r}")


def evaluate(problem, controls, objective, gradient=None):
    """Objective value and, when ``gradient`` names a mode, its gradient.

    Returns ``(value, grad_or_None, per_sample_values)``.
    """
    u = check_controls(controls, *problem.control_shape)
    detunings, weights = objective.samples(problem)
    R, E, states = _propagate(problem, u, detunings, trajectories=gradient is not None)
    value, per_sample, a = _terminal(objective, states[:, -1], weights)
    grad = None if gradient is None else _gradient(problem, R, E, states, a, gradient)
    return value, grad, per_sample


def objective_value(problem, controls, objective=None):
    """D (helstrom) or P_e (fixed_local), averaged over detunings if robust."""
    objective = Objective.for_problem(problem) if objective is None else objective
    return evaluate(problem, controls, objective)[0]


def objective_gradient(problem, controls, objective=None, mode="exact"):
    """Gradient of :func:`objective_value` with respect to ``u[k, n]``."""
    objective = Objective.for_problem(problem) if objective is None else objective
    return evaluate(problem, controls, objective, gradient=mode)[1]


def finite_difference_gradient(problem, controls, objective=None, step=1e-6):
    """Central-difference gradient of :func:`objective_value`.

    Costs two objective evaluations per control amplitude; meant for checks.
    """
    if not step > 0:
        raise ValueError("finite-difference step must be positive")
    objective = Objective.for_problem(problem) if objective is None else objective
    u = check_controls(controls, *problem.control_shape)
    g = np.zeros_like(u)
    for idx in np.ndindex(*u.shape):
        up, um = u.copy(), u.copy()
        up[idx] += step
        um[idx] -= step
        g[idx] = (objective_value(problem, up, objective)
                  - objective_value(problem, um, objective)) / (2 * step)
    return g
