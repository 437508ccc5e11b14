"""scikit-learn style front end for the pulse optimizers.

The "data" handed to :meth:`PulseOptimizer.fit` is a
:class:`~qhtcontrol.problem.DiscriminationProblem`; fitting learns a control
field.  ``predict`` maps detunings to Helstrom errors of the learned field,
and ``score`` is the negated nominal Helstrom error so that larger is better.

>>> from qhtcontrol.scenarios import make_problem
>>> est = PulseOptimizer(max_iter=5).fit(make_problem("parallel", 0.1, 1.0))
>>> est.controls_.shape
(2, 20)
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .objectives import Objective
from .optimize import AnnealOptions, GrapeOptions, optimize
from .problem import DiscriminationProblem
from .scenarios import helstrom_profile


class PulseOptimizer(BaseEstimator):
    """GRAPE or SAGRAPE with optional robust averaging.

    Parameters
    ----------
    method : {"grape", "sagrape"}
    restarts : int
        Best-of-``restarts`` runs (see :func:`qhtcontrol.optimize.optimize`).
    seed : int
        Seeds the restart and annealing streams.
    tol, max_iter, gradient_mode, u_max
        Forwarded to :class:`~qhtcontrol.optimize.GrapeOptions`.
    robust_window : pair of float or None
        Train on the mean error over this detuning window.
    robust_samples : int
        Number of evenly spaced training detunings.
    initial_temperature, cooling_factor, cooling_steps, perturbation
        Forwarded to :class:`~qhtcontrol.optimize.AnnealOptions`.
    init_scale : float
        Amplitude of random restart fields.

    Attributes
    ----------
    controls_ : ndarray of shape (n_controls, n_slices)
    result_ : OptimizationResult
    n_iter_ : int
    problem_ : DiscriminationProblem
    """

    def __init__(self, method="grape", restarts=1, seed=0, tol=1e-6, max_iter=2000,
                 gradient_mode="exact", u_max=None, robust_window=None, robust_samples=21,
                 initial_temperature=0.02, cooling_factor=0.9, cooling_steps=50,
                 perturbation=0.1, init_scale=1.0):
        self.method = method
        self.restarts = restarts
        self.seed = seed
        self.tol = tol
        self.max_iter = max_iter
        self.gradient_mode = gradient_mode
        self.u_max = u_max
        self.robust_window = robust_window
        self.robust_samples = robust_samples
        self.initial_temperature = initial_temperature
        self.cooling_factor = cooling_factor
        self.cooling_steps = cooling_steps
        self.perturbation = perturbation
        self.init_scale = init_scale

    def _objective(self, problem):
        return Objective.for_problem(problem, self.robust_window, self.robust_samples)

    def fit(self, X, y=None, init=None):
        """Optimize a pulse for the problem ``X``; ``y`` is ignored."""
        if not isinstance(X, DiscriminationProblem):
            raise TypeError("fit expects a DiscriminationProblem")
        grape_options = GrapeOptions(tol=self.tol, max_iter=self.max_iter,
                                     gradient_mode=self.gradient_mode, u_max=self.u_max)
        anneal_options = AnnealOptions(initial_temperature=self.initial_temperature,
                                       cooling_factor=self.cooling_factor,
                                       cooling_steps=self.cooling_steps,
                                       perturbation=self.perturbation)
        self.result_ = optimize(X, self._objective(X), method=self.method,
                                restarts=self.restarts, seed=self.seed, init=init,
                                grape_options=grape_options, anneal_options=anneal_options,
                                init_scale=self.init_scale)
        self.problem_ = X
        self.controls_ = self.result_.controls
        self.n_iter_ = self.result_.n_iter
        return self

    def transform(self, X=None):
        """The learned control field (the problem argument is only checked)."""
        check_is_fitted(self, "controls_")
        if X is not None and X.control_shape != self.controls_.shape:
            raise ValueError(f"control shape {self.controls_.shape} does not fit the "
                             f"problem's {X.control_shape}")
        return self.controls_

    def fit_transform(self, X, y=None, init=None):
        return self.fit(X, y, init).transform()

    def predict(self, detunings):
        """Helstrom error of the learned pulse at each detuning."""
        check_is_fitted(self, "controls_")
        return helstrom_profile(self.problem_, self.controls_, detunings)

    def score(self, X=None, y=None):
        """Negative Helstrom error at the problem's own detuning."""
        check_is_fitted(self, "controls_")
        problem = self.problem_ if X is None else X
        return -float(helstrom_profile(problem, self.transform(problem),
                                       [problem.detuning])[0])


class GrapeOptimizer(PulseOptimizer):
    """:class:`PulseOptimizer` fixed to plain GRAPE."""

    def __init__(self, restarts=1, seed=0, tol=1e-6, max_iter=2000, gradient_mode="exact",
                 u_max=None, robust_window=None, robust_samples=21, init_scale=1.0):
        super().__init__(method="grape", restarts=restarts, seed=seed, tol=tol,
                         max_iter=max_iter, gradient_mode=gradient_mode, u_max=u_max,
                         robust_window=robust_window, robust_samples=robust_samples,
                         init_scale=init_scale)

    @classmethod
    def _get_param_names(cls):
        return sorted(set(PulseOptimizer._get_param_names()) - {
            "method", "initial_temperature", "cooling_factor", "cooling_steps",
            "perturbation"})


class SAGrapeOptimizer(PulseOptimizer):
    """:class:`PulseOptimizer` fixed to simulated-annealing GRAPE."""

    def __init__(self, restarts=1, seed=0, tol=1e-6, max_iter=2000, gradient_mode="exact",
                 u_max=None, robust_window=None, robust_samples=21,
                 initial_temperature=0.02, cooling_factor=0.9, cooling_steps=50,
                 perturbation=0.1, init_scale=1.0):
        super().__init__(method="sagrape", restarts=restarts, seed=seed, tol=tol,
                         max_iter=max_iter, gradient_mode=gradient_mode, u_max=u_max,
                         robust_window=robust_window, robust_samples=robust_samples,
                         initial_temperature=initial_temperature,
                         cooling_factor=cooling_factor, cooling_steps=cooling_steps,
                         perturbation=perturbation, init_scale=init_scale)

    @classmethod
    def _get_param_names(cls):
        return sorted(set(PulseOptimizer._get_param_names()) - {"method"})
