"""GRAPE and simulated-annealing GRAPE for discrimination objectives."""

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .discrimination import fixed_local_error, helstrom_error
from .objectives import GRADIENT_MODES, Objective, evaluate
from .propagation import evolve
from .validation import check_controls

logger = logging.getLogger(__name__)

GOLDEN = 0.5 * (1.0 + np.sqrt(5.0))
INITIAL_AMPLITUDE = 0.01


class NumericalFailure(FloatingPointError):
    """The objective became non-finite during optimization."""


@dataclass(frozen=True)
class GrapeOptions:
    tol: float = 1e-6
    max_iter: int = 2000
    gradient_mode: str = "exact"
    line_search_tol: float = 1e-4
    armijo: float = 1e-4
    initial_step: float = 0.1
    max_expansions: int = 60
    u_max: float = None
    gtol: float = 1e-12

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(f"gradient_mode must be one of {GRADIENT_MODES}")
        if not 0 < self.line_search_tol < 1:
            raise ValueError("line_search_tol must lie in (0, 1)")
        if self.u_max is not None and not self.u_max > 0:
            raise ValueError("u_max must be positive when given")


@dataclass(frozen=True)
class AnnealOptions:
    initial_temperature: float = 0.02
    cooling_factor: float = 0.9
    cooling_steps: int = 50
    perturbation: float = 0.1
    grape_iters_per_cycle: int = 50
    max_cycles: int = 200
    patience: int = 5

    def __post_init__(self):
        if not 0 < self.cooling_factor < 1:
            raise ValueError("cooling_factor must lie in (0, 1)")
        if self.cooling_steps < 1:
            raise ValueError("cooling_steps must be >= 1")
        if not self.initial_temperature > 0:
            raise ValueError("initial_temperature must be positive")
        if not self.perturbation >= 0:
            raise ValueError("perturbation must be >= 0")
        if self.grape_iters_per_cycle < 1 or self.max_cycles < 1 or self.patience < 1:
            raise ValueError("grape_iters_per_cycle, max_cycles and patience must be >= 1")


@dataclass(eq=False)
class OptimizationResult:
    """Outcome of one optimization run.

    ``trace`` holds the objective value (D or P_e, averaged when robust)
    after every iteration, starting with the initial field.
    """

    controls: np.ndarray
    objective: float
    trace: np.ndarray
    pe_helstrom: float
    pe_fixed: float
    n_iter: int
    converged: bool
    method: str
    seed: int = None
    n_evals: int = 0
    wall_seconds: float = field(default=0.0, compare=False)

    def __eq__(self, other):
        if not isinstance(other, OptimizationResult):
            return NotImplemented
        return (np.array_equal(self.controls, other.controls)
                and np.array_equal(self.trace, other.trace)
                and (self.objective, self.pe_helstrom, self.pe_fixed, self.n_iter,
                     self.converged, self.method, self.seed, self.n_evals)
                == (other.objective, other.pe_helstrom, other.pe_fixed, other.n_iter,
                    other.converged, other.method, other.seed, other.n_evals))


def error_probabilities(problem, controls, detuning=None):
    """Helstrom and fixed-local error of the final states at one detuning."""
    rho0, _ = evolve(problem, 0, controls, detuning=detuning)
    rho1, _ = evolve(problem, 1, controls, detuning=detuning)
    return helstrom_error(rho0, rho1), fixed_local_error(rho0, rho1, problem.povm, problem.priors)


def initial_controls(problem, kind="constant", rng=None, scale=1.0):
    """Starting field: ``constant`` 0.01, ``zero``, or seeded ``random`` uniform."""
    if kind == "constant":
        return np.full(problem.control_shape, INITIAL_AMPLITUDE)
    if kind == "zero":
        return problem.zero_controls()
    if kind == "random":
        rng = np.random.default_rng(rng)
        return rng.uniform(-scale, scale, size=problem.control_shape)
    raise ValueError(f"unknown initial control kind {kind!r}")


class _Fitness:
    """Objective wrapper that maximizes ``sense * value`` and counts calls."""

    def __init__(self, problem, objective, options):
        self.problem = problem
        self.objective = objective
        self.options = options
        self.n_evals = 0

    def project(self, u):
        m = self.options.u_max
        return u if m is None else np.clip(u, -m, m)

    def __call__(self, u):
        self.n_evals += 1
        value = evaluate(self.problem, u, self.objective)[0]
        if not np.isfinite(value):
            raise NumericalFailure(f"non-finite objective value {value!r}")
        return self.objective.sense * value

    def gradient(self, u):
        _, g, _ = evaluate(self.problem, u, self.objective, gradient=self.options.gradient_mode)
        if not np.all(np.isfinite(g)):
            raise NumericalFailure("non-finite gradient")
        return self.objective.sense * g


def line_search(f, u, d, f0, step, options):
    """Maximize ``f(u + eps d)`` over ``eps > 0``.

    Brackets a maximum starting from ``step`` (expanding by the golden ratio,
    or shrinking when the first trial does not ascend), then refines it by
    Brent's method (golden section accelerated by parabolic steps) to
    relative tolerance ``options.line_search_tol``.
    If the result violates the Armijo condition the step is halved until it
    holds.  Returns ``(eps, f(u + eps d), new_u)``; ``eps == 0`` signals that
    no ascent was found.
    """
    slope = float(np.vdot(d, d))
    cache = {0.0: f0}

    def phi(eps):
        if eps not in cache:
            cache[eps] = f(f.project(u + eps * d))
        return cache[eps]

    a, b = 0.0, step
    fb = phi(b)
    if fb > f0:
        c = b + GOLDEN * (b - a)
        for _ in range(options.max_expansions):
            if phi(c) <= fb:
                break
            a, b, fb = b, c, phi(c)
            c = b + GOLDEN * (b - a)
    else:
        c = b
        while True:
            b = c / GOLDEN ** 2
            if b < 1e-14 * max(1.0, step):
                return 0.0, f0, u
            if phi(b) > f0:
                break
            c = b
    # Brent refinement (golden section with parabolic steps) on the bracket
    res = minimize_scalar(lambda e: -phi(e), bracket=(a, b, c), method="brent",
                          options={"xtol": options.line_search_tol})
    if res.success and res.x > 0 and phi(res.x) >= phi(b):
        b = float(res.x)
    eps = b
    while phi(eps) < f0 + options.armijo * eps * slope and options.u_max is None:
        eps *= 0.5
        if eps < 1e-14 * max(1.0, step):
            return 0.0, f0, u
    return eps, phi(eps), f.project(u + eps * d)


def _grape_loop(f, u, fu, options, max_iter, trace, sense):
    """Steepest ascent with line search.  Returns (u, f(u), iterations, converged)."""
    step = None
    for it in range(max_iter):
        g = f.gradient(u)
        gnorm = float(np.abs(g).max())
        if gnorm < options.gtol:
            return u, fu, it, True
        if step is None:
            step = options.initial_step / gnorm
        eps, f_new, u_new = line_search(f, u, g, fu, step, options)
        if eps == 0.0 or f_new <= fu:
            return u, fu, it, True
        gain = f_new - fu
        u, fu, step = u_new, f_new, eps
        trace.append(sense * fu)
        if gain < options.tol:
            return u, fu, it + 1, True
    return u, fu, max_iter, False


def _finish(problem, objective, f, u, trace, n_iter, converged, method, seed, t0):
    pe_h, pe_f = error_probabilities(problem, u)
    return OptimizationResult(
        controls=u,
        objective=trace[-1],
        trace=np.asarray(trace, dtype=float),
        pe_helstrom=pe_h,
        pe_fixed=pe_f,
        n_iter=n_iter,
        converged=converged,
        method=method,
        seed=seed,
        n_evals=f.n_evals,
        wall_seconds=time.perf_counter() - t0,
    )


def grape(problem, objective=None, init=None, options=None):
    """Gradient ascent pulse engineering.

    Repeats ``u <- u + eps * grad`` with ``eps`` from :func:`line_search`
    until the objective changes by less than ``options.tol`` between
    iterations or ``options.max_iter`` is reached.
    """
    t0 = time.perf_counter()
    objective = Objective.for_problem(problem) if objective is None else objective
    options = GrapeOptions() if options is None else options
    u = check_controls(initial_controls(problem) if init is None else init,
                       *problem.control_shape).copy()
    f = _Fitness(problem, objective, options)
    u = f.project(u)
    fu = f(u)
    trace = [objective.sense * fu]
    u, fu, n_iter, converged = _grape_loop(f, u, fu, options, options.max_iter, trace,
                                           objective.sense)
    logger.debug("grape: %d iterations, objective %.6g", n_iter, trace[-1])
    return _finish(problem, objective, f, u, trace, n_iter, converged, "grape", None, t0)


def anneal_accepts(delta, temperature):
    """Threshold rule: accept when ``delta >= -min(1, T exp(delta / T))``."""
    if delta >= 0:
        return True
    with np.errstate(over="ignore", under="ignore"):
        threshold = -min(1.0, temperature * np.exp(delta / temperature))
    return delta >= threshold


def sagrape(problem, objective=None, init=None, grape_options=None, anneal_options=None,
            seed=0):
    """GRAPE interleaved with simulated-annealing sweeps.

    Each cycle makes ``cooling_steps`` random proposals ``u + U(-s, s)``,
    accepting by :func:`anneal_accepts` while the temperature is multiplied by
    ``cooling_factor``; then at most ``grape_iters_per_cycle`` GRAPE
    iterations run from the annealed field.  A cycle stalls when the best
    objective improves by less than ``tol``; the run stops at a stalled cycle
    whose GRAPE pass converged on its own, or after ``patience`` consecutive
    stalled cycles.  The best field
    seen is returned.
    """
    t0 = time.perf_counter()
    objective = Objective.for_problem(problem) if objective is None else objective
    gopt = GrapeOptions() if grape_options is None else grape_options
    aopt = AnnealOptions() if anneal_options is None else anneal_options
    rng = np.random.default_rng(seed)
    u = check_controls(initial_controls(problem) if init is None else init,
                       *problem.control_shape).copy()
    f = _Fitness(problem, objective, gopt)
    u = f.project(u)
    fu = f(u)
    sense = objective.sense
    trace = [sense * fu]
    best_u, best_f = u, fu
    n_iter = 0
    converged = False
    stalled = 0
    for _ in range(aopt.max_cycles):
        cycle_start = best_f
        temperature = aopt.initial_temperature
        for _ in range(aopt.cooling_steps):
            proposal = f.project(u + rng.uniform(-aopt.perturbation, aopt.perturbation, u.shape))
            fp = f(proposal)
            if anneal_accepts(fp - fu, temperature):
                u, fu = proposal, fp
            trace.append(sense * fu)
            if fu > best_f:
                best_u, best_f = u, fu
            temperature *= aopt.cooling_factor
        budget = min(aopt.grape_iters_per_cycle, gopt.max_iter - n_iter)
        u, fu, it, settled = _grape_loop(f, u, fu, gopt, budget, trace, sense)
        n_iter += it
        if fu > best_f:
            best_u, best_f = u, fu
        stalled = stalled + 1 if best_f - cycle_start < gopt.tol else 0
        # one stalled cycle suffices once the gradient phase settled on its own;
        # when the cycle budget cut it short, wait for `patience` stalled cycles
        if stalled and (settled or stalled >= aopt.patience):
            converged = True
            break
        if n_iter >= gopt.max_iter:
            break
    trace.append(sense * best_f)
    logger.debug("sagrape: %d grape iterations, objective %.6g", n_iter, trace[-1])
    return _finish(problem, objective, f, best_u, trace, n_iter, converged, "sagrape", seed, t0)


def optimize(problem, objective=None, method="grape", restarts=1, seed=0, init=None,
             grape_options=None, anneal_options=None, init_scale=1.0):
    """Best of several runs from different starting fields.

    Run 0 starts from ``init`` (default: constant 0.01), run 1 from the zero
    field, later runs from seeded random fields of amplitude ``init_scale``.
    The zero field itself is kept if no run beats it.  Random streams are
    split per run index, so results do not depend on execution order.
    """
    if method not in ("grape", "sagrape"):
        raise ValueError(f"method must be 'grape' or 'sagrape', got {method!r}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    t0 = time.perf_counter()
    objective = Objective.for_problem(problem) if objective is None else objective
    streams = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    for r in range(restarts):
        rng = np.random.default_rng(streams[r])
        if r == 0:
            start = initial_controls(problem) if init is None else init
        elif r == 1:
            start = initial_controls(problem, "zero")
        else:
            start = initial_controls(problem, "random", rng, init_scale)
        if method == "grape":
            res = grape(problem, objective, start, grape_options)
        else:
            res = sagrape(problem, objective, start, grape_options, anneal_options,
                          seed=rng.integers(2**63))
        logger.info("restart %d: objective %.6g (%d iterations)", r, res.objective, res.n_iter)
        if best is None or objective.sense * res.objective > objective.sense * best.objective:
            best = res
    zero = problem.zero_controls()
    zero_value = evaluate(problem, zero, objective)[0]
    if objective.sense * zero_value > objective.sense * best.objective:
        pe_h, pe_f = error_probabilities(problem, zero)
        best = OptimizationResult(zero, zero_value, np.array([zero_value]), pe_h, pe_f,
                                  0, True, method)
    best.seed = seed
    best.wall_seconds = time.perf_counter() - t0
    return best
