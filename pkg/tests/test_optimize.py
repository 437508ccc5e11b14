import sys

import numpy as np
import pytest

from qhtcontrol.objectives import Objective, objective_gradient, objective_value
from qhtcontrol.optimize import (
    AnnealOptions,
    GrapeOptions,
    NumericalFailure,
    OptimizationResult,
    anneal_accepts,
    error_probabilities,
    grape,
    initial_controls,
    line_search,
    optimize,
    sagrape,
)
from qhtcontrol.scenarios import make_problem, uncontrolled_error

FAST = GrapeOptions(max_iter=40)
FAST_ANNEAL = AnnealOptions(cooling_steps=10, grape_iters_per_cycle=5, max_cycles=3)


class _Quadratic:
    """phi(eps) = -(eps - 2)^2 along d = 1, with the interface line_search expects."""

    def __init__(self):
        self.n_evals = 0

    def project(self, u):
        return u

    def __call__(self, u):
        self.n_evals += 1
        return -float((u[0] - 2.0) ** 2)


class TestLineSearch:
    def test_finds_maximum(self):
        f = _Quadratic()
        u = np.zeros(1)
        eps, fe, u_new = line_search(f, u, np.ones(1), f(u), 0.1, GrapeOptions())
        assert eps == pytest.approx(2.0, rel=1e-4)
        assert fe == pytest.approx(0.0, abs=1e-7)
        assert u_new[0] == eps

    def test_shrinks_overlong_first_step(self):
        f = _Quadratic()
        eps, _, _ = line_search(f, np.zeros(1), np.ones(1), f(np.zeros(1)), 50.0, GrapeOptions())
        assert eps == pytest.approx(2.0, rel=1e-4)

    def test_reports_no_ascent(self):
        f = _Quadratic()
        u = np.array([2.0])
        eps, fe, u_new = line_search(f, u, np.ones(1), f(u), 0.1, GrapeOptions())
        assert eps == 0.0 and fe == 0.0 and u_new is u


class TestAnnealRule:
    def test_improvements_always_accepted(self):
        assert anneal_accepts(0.0, 0.02)
        assert anneal_accepts(1e-3, 1e-12)

    def test_zero_temperature_limit_is_greedy(self):
        # any fixed loss is rejected once T is small compared with it
        for delta in (-1e-12, -1e-9, -0.1):
            assert not anneal_accepts(delta, 1e-15)

    def test_threshold(self):
        T = 0.02
        # delta >= -T exp(delta / T): accepted just above the fixed point
        assert anneal_accepts(-0.005, T)
        assert not anneal_accepts(-0.05, T)
        # the min(1, .) cap never binds for T <= 1 and delta <= 0
        assert not anneal_accepts(-1.5, 5.0)


class TestGrape:
    def test_objective_trace_never_decreases(self):
        for kind in ("parallel", "transverse", "emission"):
            res = grape(make_problem(kind, 0.1, 3.0), options=FAST)
            assert np.all(np.diff(res.trace) >= 0)

    def test_fixed_local_trace_never_increases(self):
        res = grape(make_problem("emission", 0.1, 3.0, measurement="fixed_local"), options=FAST)
        assert np.all(np.diff(res.trace) <= 0)
        assert res.pe_fixed == pytest.approx(res.objective, abs=1e-12)

    def test_unitary_quarter_period_stays_perfect(self):
        p = make_problem("parallel", 0.0, np.pi / 2)
        res = grape(p)
        assert res.pe_helstrom <= 1e-6

    def test_returns_immediately_at_stationary_point(self):
        p = make_problem("parallel", 0.0, np.pi / 2)
        u = p.zero_controls()
        assert np.abs(objective_gradient(p, u)).max() < 1e-12
        res = grape(p, init=u)
        assert res.n_iter == 0 and res.converged
        np.testing.assert_array_equal(res.controls, u)

    def test_improves_on_initial_field(self):
        p = make_problem("transverse", 0.1, 4.0)
        res = grape(p, options=FAST)
        assert res.objective > objective_value(p, initial_controls(p))
        assert res.pe_helstrom < uncontrolled_error("transverse", 0.1, 4.0)

    def test_result_fields(self):
        p = make_problem("parallel", 0.1, 2.0)
        res = grape(p, options=FAST)
        assert res.controls.shape == p.control_shape
        assert res.trace[-1] == res.objective
        assert (res.pe_helstrom, res.pe_fixed) == error_probabilities(p, res.controls)
        assert res.n_evals > res.n_iter
        assert res.wall_seconds > 0

    def test_amplitude_bound(self):
        p = make_problem("emission", 0.1, 3.0)
        res = grape(p, options=GrapeOptions(max_iter=20, u_max=0.5))
        assert np.abs(res.controls).max() <= 0.5

    def test_max_iter_reports_not_converged(self):
        res = grape(make_problem("transverse", 0.1, 3.0), options=GrapeOptions(max_iter=2))
        assert res.n_iter == 2 and not res.converged

    def test_rejects_non_finite_initial_field(self):
        p = make_problem("parallel", 0.1, 1.0)
        with pytest.raises(ValueError, match="non-finite"):
            grape(p, init=np.full(p.control_shape, np.nan))

    def test_non_finite_objective_aborts(self, monkeypatch):
        mod = sys.modules["qhtcontrol.optimize"]
        p = make_problem("parallel", 0.1, 1.0)
        monkeypatch.setattr(mod, "evaluate", lambda *a, **k: (np.nan, None, None))
        with pytest.raises(NumericalFailure):
            grape(p)

    def test_deterministic(self):
        p = make_problem("emission", 0.1, 3.0)
        assert grape(p, options=FAST) == grape(p, options=FAST)

    @pytest.mark.parametrize("kwargs", [dict(tol=0), dict(max_iter=0),
                                        dict(gradient_mode="adjoint"), dict(u_max=-1.0)])
    def test_invalid_options(self, kwargs):
        with pytest.raises(ValueError):
            GrapeOptions(**kwargs)


class TestSagrape:
    def test_deterministic_with_seed(self):
        p = make_problem("parallel", 0.1, 3.0)
        a = sagrape(p, grape_options=FAST, anneal_options=FAST_ANNEAL, seed=7)
        b = sagrape(p, grape_options=FAST, anneal_options=FAST_ANNEAL, seed=7)
        assert a == b
        assert a.trace.tobytes() == b.trace.tobytes()
        c = sagrape(p, grape_options=FAST, anneal_options=FAST_ANNEAL, seed=8)
        assert not np.array_equal(a.trace, c.trace)

    def test_returns_best_seen(self):
        p = make_problem("transverse", 0.1, 3.0)
        res = sagrape(p, grape_options=FAST, anneal_options=FAST_ANNEAL, seed=1)
        assert res.objective == pytest.approx(res.trace.max(), abs=0)
        assert objective_value(p, res.controls) == pytest.approx(res.objective, abs=1e-14)

    def test_zero_temperature_only_accepts_improvements(self):
        p = make_problem("emission", 0.1, 2.0)
        opts = AnnealOptions(initial_temperature=1e-12, cooling_steps=20,
                             grape_iters_per_cycle=1, max_cycles=1)
        res = sagrape(p, grape_options=GrapeOptions(max_iter=1), anneal_options=opts, seed=3)
        annealing = res.trace[1:21]
        assert np.all(np.diff(np.concatenate([[res.trace[0]], annealing])) >= 0)

    def test_stops_after_patience_stalled_cycles(self):
        # from the global maximum no cycle can improve the best objective
        p = make_problem("parallel", 0.0, np.pi / 2)
        opts = AnnealOptions(cooling_steps=5, grape_iters_per_cycle=1, patience=3)
        res = sagrape(p, init=p.zero_controls(), anneal_options=opts, seed=0)
        assert res.converged and res.n_iter <= 3
        assert res.objective == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_array_equal(res.controls, 0.0)

    @pytest.mark.parametrize("kwargs", [dict(cooling_factor=1.0), dict(cooling_steps=0),
                                        dict(initial_temperature=0.0),
                                        dict(perturbation=-0.1), dict(patience=0)])
    def test_invalid_options(self, kwargs):
        with pytest.raises(ValueError):
            AnnealOptions(**kwargs)


class TestRestarts:
    def test_never_worse_than_uncontrolled(self):
        # a single short run from 0.01 cannot beat free evolution at T = pi/2
        p = make_problem("parallel", 0.1, np.pi / 2)
        res = optimize(p, restarts=1, grape_options=GrapeOptions(max_iter=1))
        assert res.pe_helstrom <= uncontrolled_error("parallel", 0.1, np.pi / 2) + 1e-12

    def test_best_of_runs_and_deterministic(self):
        p = make_problem("transverse", 0.1, 3.0)
        best = optimize(p, restarts=3, seed=5, grape_options=FAST)
        single = optimize(p, restarts=1, seed=5, grape_options=FAST)
        assert best.objective >= single.objective
        assert best == optimize(p, restarts=3, seed=5, grape_options=FAST)
        assert best.seed == 5

    def test_sagrape_restarts(self):
        p = make_problem("parallel", 0.1, 2.0)
        res = optimize(p, method="sagrape", restarts=2, seed=1, grape_options=FAST,
                       anneal_options=FAST_ANNEAL)
        assert isinstance(res, OptimizationResult) and res.method == "sagrape"

    def test_robust_objective(self):
        p = make_problem("transverse", 0.1, 2.0)
        obj = Objective.for_problem(p, (-0.1, 0.1), 5)
        res = optimize(p, obj, grape_options=FAST)
        assert res.objective == pytest.approx(objective_value(p, res.controls, obj), abs=1e-14)

    def test_invalid(self):
        p = make_problem("parallel", 0.1, 1.0)
        with pytest.raises(ValueError):
            optimize(p, method="krotov")
        with pytest.raises(ValueError):
            optimize(p, restarts=0)
        with pytest.raises(ValueError):
            initial_controls(p, "gaussian")
