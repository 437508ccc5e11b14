"""Physical settings, uncontrolled baselines and the experiment drivers.

Three noise channels act on a qubit prepared in |+>, testing H0 = 0 against
H1 = (1 + dw) sigma_z with sigma_x / sigma_y controls:

``parallel``
    dephasing along z, jump operator sqrt(gamma/2) sigma_z;
``transverse``
    dephasing along x, jump operator sqrt(gamma/2) sigma_x;
``emission``
    decay toward |0> at rate gamma_minus = gamma (plus optional pumping at
    gamma_plus), dissipator ``gamma/2 (2 s- rho s+ - {s+ s-, rho})``.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import (
    RHO_PLUS,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    CollapseOperator,
    bloch_vectors,
)
from .discrimination import PLUS_MINUS_POVM, SYMMETRIC, averaged_error
from .objectives import Objective, evaluate
from .optimize import error_probabilities, optimize
from .problem import DiscriminationProblem, TimeGrid
from .propagation import evolve

KINDS = ("parallel", "transverse", "emission")
DEFAULT_DT = 0.05


def make_problem(kind, gamma, T, n_slices=None, detuning=0.0, measurement="helstrom",
                 gamma_plus=0.0, povm=PLUS_MINUS_POVM, priors=SYMMETRIC):
    """Build one of the three benchmark problems.

    ``n_slices`` defaults to ``round(T / 0.05)``.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown scenario kind {kind!r}; expected one of {KINDS}")
    if not (np.isfinite(gamma) and gamma >= 0):
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    if not (np.isfinite(gamma_plus) and gamma_plus >= 0):
        raise ValueError(f"gamma_plus must be >= 0, got {gamma_plus}")
    grid = TimeGrid.from_step(T, DEFAULT_DT) if n_slices is None else TimeGrid(T, n_slices)
    if kind == "parallel":
        collapses = (CollapseOperator(SIGMA_Z, gamma / 2),)
    elif kind == "transverse":
        collapses = (CollapseOperator(SIGMA_X, gamma / 2),)
    else:
        # gamma/2 (2 L rho L^+ - {L^+ L, rho}) = gamma * D[L]
        collapses = (CollapseOperator(SIGMA_MINUS, gamma),)
        if gamma_plus > 0:
            collapses += (CollapseOperator(SIGMA_PLUS, gamma_plus),)
    return DiscriminationProblem(
        hamiltonians=(np.zeros((2, 2), dtype=complex), SIGMA_Z),
        collapses=collapses,
        control_hamiltonians=(SIGMA_X, SIGMA_Y),
        grid=grid,
        rho_init=RHO_PLUS,
        control_labels=("x", "y"),
        detuning=float(detuning),
        measurement=measurement,
        povm=povm,
        priors=priors,
        kind=kind,
        gamma=float(gamma),
    )


# Bloch-equation oracle.  Written from the textbook Bloch equations, not from
# the superoperator code: dr/dt = 2 h x r for H = h . sigma, dephasing along n
# damps the components orthogonal to n at rate gamma, and decay toward +z
# damps x, y at gamma/2 and relaxes z to 1 at rate gamma.

def bloch_affine(kind, gamma, field_z, gamma_plus=0.0):
    """``(M, c)`` with ``dr/dt = M r + c`` for the uncontrolled dynamics."""
    M = 2.0 * field_z * np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    c = np.zeros(3)
    if kind == "parallel":
        M = M - gamma * np.diag([1.0, 1.0, 0.0])
    elif kind == "transverse":
        M = M - gamma * np.diag([0.0, 1.0, 1.0])
    elif kind == "emission":
        g = gamma + gamma_plus
        M = M - np.diag([g / 2, g / 2, g])
        c[2] = gamma - gamma_plus
    else:
        raise ValueError(f"unknown scenario kind {kind!r}")
    return M, c


def rk4_bloch(M, c, r0, T, h=1e-4):
    """Classical fixed-step RK4 for ``dr/dt = M r + c``.

    For a linear autonomous system one RK4 step is the affine map
    ``x -> Phi x`` with ``Phi`` the degree-4 Taylor polynomial of ``h A``
    (``A`` augmented with the constant term); the ``n`` steps are then applied
    by repeated squaring, which is arithmetically the same scheme.
    """
    n = max(1, int(np.ceil(T / h - 1e-9)))
    h = T / n
    A = np.zeros((4, 4))
    A[:3, :3] = M
    A[:3, 3] = c
    hA = h * A
    step = np.eye(4)
    term = np.eye(4)
    for k in range(1, 5):
        term = term @ hA / k
        step = step + term
    x = np.linalg.matrix_power(step, n) @ np.append(np.asarray(r0, float), 1.0)
    return x[:3]


def _density(r):
    x, y, z = r
    return 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]])


def uncontrolled_error(kind, gamma, T, detuning=0.0, gamma_plus=0.0):
    """Helstrom error of free evolution from |+>.

    Parallel dephasing has the closed form
    ``(1 - exp(-gamma T) |sin((1 + dw) T)|) / 2``; the other two channels are
    integrated with :func:`rk4_bloch`.
    """
    if not gamma >= 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    if kind == "parallel" and gamma_plus == 0:
        return 0.5 * (1.0 - np.exp(-gamma * T) * abs(np.sin((1.0 + detuning) * T)))
    r_init = np.array([1.0, 0.0, 0.0])
    r0 = rk4_bloch(*bloch_affine(kind, gamma, 0.0, gamma_plus), r_init, T)
    r1 = rk4_bloch(*bloch_affine(kind, gamma, 1.0 + detuning, gamma_plus), r_init, T)
    # trace distance of two qubit states is half the Bloch-vector distance
    return 0.5 * (1.0 - 0.5 * float(np.linalg.norm(r0 - r1)))


def helstrom_profile(problem, controls, detunings):
    """Helstrom error of one pulse at each detuning, evaluated in one batch."""
    detunings = np.atleast_1d(np.asarray(detunings, dtype=float))
    _, _, D = evaluate(problem, controls, Objective(detunings=tuple(detunings)))
    # D = D_tr^2 for qubits
    return 0.5 * (1.0 - np.sqrt(np.clip(D, 0.0, None)))


def bloch_trajectories(problem, controls, detuning=None):
    """Sampled Bloch vectors of both hypotheses at the slice boundaries.

    Returns ``(times, r0, r1)`` with ``r_j`` of shape ``(N + 1, 3)``.
    """
    _, t0 = evolve(problem, 0, controls, record=True, detuning=detuning)
    _, t1 = evolve(problem, 1, controls, record=True, detuning=detuning)
    return t0.times, bloch_vectors(t0.states), bloch_vectors(t1.states)


# Experiment drivers ---------------------------------------------------------

SWEEP_PARAMETERS = ("T", "gamma", "detuning")
SWEEP_METHODS = ("grape", "sagrape", "none")


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter family of optimizations.

    ``parameter`` names the swept field (``T``, ``gamma`` or ``detuning``);
    the remaining fields hold the fixed values.  ``method="none"`` records the
    uncontrolled errors only.
    """

    parameter: str
    values: tuple
    kind: str = "parallel"
    gamma: float = 0.1
    T: float = 10.0
    detuning: float = 0.0
    gamma_plus: float = 0.0
    dt: float = DEFAULT_DT
    measurement: str = "helstrom"
    method: str = "grape"
    restarts: int = 1
    seed: int = 0
    grape_options: object = None
    anneal_options: object = None

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"parameter must be one of {SWEEP_PARAMETERS}, got {self.parameter!r}")
        values = tuple(float(v) for v in np.atleast_1d(self.values))
        if not values:
            raise ValueError("sweep needs at least one value")
        if not all(np.isfinite(values)):
            raise ValueError("sweep values must be finite")
        if self.parameter == "gamma" and min(values) < 0:
            raise ValueError("gamma values must be >= 0")
        if self.parameter == "T" and min(values) <= 0:
            raise ValueError("T values must be positive")
        if self.method not in SWEEP_METHODS:
            raise ValueError(f"method must be one of {SWEEP_METHODS}, got {self.method!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "values", values)

    def problem(self, value):
        p = {"T": self.T, "gamma": self.gamma, "detuning": self.detuning}
        p[self.parameter] = value
        grid_T = p["T"]
        return make_problem(self.kind, p["gamma"], grid_T,
                            n_slices=max(1, int(round(grid_T / self.dt))),
                            detuning=p["detuning"], measurement=self.measurement,
                            gamma_plus=self.gamma_plus)

    def point_seeds(self):
        """Independent integer seeds, one per swept value."""
        return [int(s.generate_state(1)[0])
                for s in np.random.SeedSequence(self.seed).spawn(len(self.values))]


@dataclass(frozen=True, eq=False)
class SweepRow:
    value: float
    pe_helstrom: float
    pe_fixed: float
    pe_uncontrolled: float
    controls: np.ndarray
    result: object = None


def _sweep_point(spec, value, seed):
    problem = spec.problem(value)
    unc = uncontrolled_error(spec.kind, problem.gamma, problem.grid.T,
                             problem.detuning, spec.gamma_plus)
    if spec.method == "none":
        u = problem.zero_controls()
        pe_h, pe_f = error_probabilities(problem, u)
        return SweepRow(value, pe_h, pe_f, unc, u)
    res = optimize(problem, method=spec.method, restarts=spec.restarts, seed=seed,
                   grape_options=spec.grape_options, anneal_options=spec.anneal_options)
    return SweepRow(value, res.pe_helstrom, res.pe_fixed, unc, res.controls, res)


def run_sweep(spec, jobs=1):
    """Optimize at every swept value; rows come back in ``spec.values`` order.

    Each point gets its own seed from :meth:`SweepSpec.point_seeds`, so the
    output does not depend on ``jobs``.
    """
    seeds = spec.point_seeds()
    if jobs <= 1 or len(spec.values) == 1:
        return [_sweep_point(spec, v, s) for v, s in zip(spec.values, seeds)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_point, [spec] * len(seeds), spec.values, seeds))


SCHEMES = ("none", "optimal", "robust")


@dataclass(frozen=True, eq=False)
class RobustnessReport:
    """Helstrom error versus detuning for the three control schemes.

    ``errors[scheme]`` is aligned with the sorted ``detunings``;
    ``averages[scheme]`` is their uniform mean over ``window``.
    """

    kind: str
    gamma: float
    T: float
    window: tuple
    detunings: np.ndarray
    errors: dict
    averages: dict
    controls: dict
    training_window: tuple = None

    def reduction(self):
        """Relative drop of the window-averaged error, robust vs optimal."""
        return 1.0 - self.averages["robust"] / self.averages["optimal"]


def default_evaluation_window(T):
    """Detunings ``[-pi/(2T), pi/(2T)]``."""
    return (-np.pi / (2 * T), np.pi / (2 * T))


def train_pulses(problem, training_window=(-0.1, 0.1), n_train=21, method="grape",
                 restarts=1, seed=0, grape_options=None, anneal_options=None):
    """Optimal pulse at zero detuning and robust pulse over ``training_window``."""
    kw = dict(method=method, restarts=restarts, seed=seed,
              grape_options=grape_options, anneal_options=anneal_options)
    nominal = problem.with_detuning(0.0)
    optimal = optimize(nominal, Objective.for_problem(nominal), **kw)
    robust = optimize(nominal, Objective.for_problem(nominal, training_window, n_train), **kw)
    return optimal, robust


def robustness_report(problem, controls, window=None, samples=41, training_window=None):
    """Evaluate the no-control, optimal and robust pulses over ``window``.

    ``controls`` maps ``"optimal"`` and ``"robust"`` to control arrays; the
    uncontrolled scheme is added here.  ``window`` defaults to
    ``[-pi/(2T), pi/(2T)]`` with ``samples`` evenly spaced points.
    """
    T = problem.grid.T
    lo, hi = default_evaluation_window(T) if window is None else map(float, window)
    if not lo <= hi:
        raise ValueError(f"evaluation window bounds out of order: {(lo, hi)}")
    if samples < 2 and hi > lo:
        raise ValueError("need at least two evaluation samples")
    grid = np.linspace(lo, hi, samples) if hi > lo else np.array([lo])
    pulses = {"none": problem.zero_controls()}
    for scheme in ("optimal", "robust"):
        if scheme not in controls:
            raise ValueError(f"controls for scheme {scheme!r} missing")
        pulses[scheme] = np.asarray(controls[scheme], dtype=float)
    base = problem.with_detuning(0.0)
    errors = {s: helstrom_profile(base, u, grid) for s, u in pulses.items()}
    averages = {s: averaged_error(e) for s, e in errors.items()}
    return RobustnessReport(problem.kind, problem.gamma, T, (lo, hi), grid, errors,
                            averages, pulses,
                            None if training_window is None else tuple(training_window))
