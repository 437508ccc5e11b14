import numpy as np
import pytest
from scipy.integrate import solve_ivp

from qhtcontrol.objectives import Objective, objective_value
from qhtcontrol.optimize import GrapeOptions, error_probabilities
from qhtcontrol.scenarios import (
    KINDS,
    SweepSpec,
    bloch_affine,
    bloch_trajectories,
    default_evaluation_window,
    helstrom_profile,
    make_problem,
    rk4_bloch,
    robustness_report,
    run_sweep,
    train_pulses,
    uncontrolled_error,
)

FAST = GrapeOptions(max_iter=15)


class TestUncontrolled:
    def test_parallel_half_period(self):
        assert uncontrolled_error("parallel", 0.1, np.pi) == pytest.approx(0.5, abs=1e-12)

    def test_parallel_quarter_period(self):
        expected = 0.5 * (1 - np.exp(-0.1 * np.pi / 2))
        assert uncontrolled_error("parallel", 0.1, np.pi / 2) == pytest.approx(expected, abs=1e-14)
        assert expected == pytest.approx(0.0727, abs=5e-5)

    def test_emission_long_time(self):
        assert uncontrolled_error("emission", 0.1, 20.0) == pytest.approx(0.33207, abs=5e-6)

    @pytest.mark.parametrize("kind", KINDS)
    def test_engine_matches_bloch_oracle(self, kind):
        rng = np.random.default_rng(KINDS.index(kind))
        for _ in range(20):
            gamma, T, dw = rng.uniform(0, 0.5), rng.uniform(0.2, 8.0), rng.uniform(-0.2, 0.2)
            p = make_problem(kind, gamma, T, n_slices=7, detuning=dw)
            pe, _ = error_probabilities(p, p.zero_controls())
            assert pe == pytest.approx(uncontrolled_error(kind, gamma, T, dw), abs=1e-6)

    def test_rk4_matches_adaptive_integrator(self):
        M, c = bloch_affine("emission", 0.3, 1.0, gamma_plus=0.05)
        sol = solve_ivp(lambda t, r: M @ r + c, (0, 3.0), [1.0, 0, 0], rtol=1e-11, atol=1e-13)
        np.testing.assert_allclose(rk4_bloch(M, c, [1.0, 0, 0], 3.0), sol.y[:, -1], atol=1e-9)

    def test_rejects_negative_gamma(self):
        with pytest.raises(ValueError, match="gamma"):
            uncontrolled_error("parallel", -0.1, 1.0)
        with pytest.raises(ValueError, match="gamma"):
            make_problem("parallel", -0.1, 1.0)
        with pytest.raises(ValueError, match="kind"):
            make_problem("amplitude", 0.1, 1.0)


class TestTrajectories:
    def test_emission_relaxes_toward_ground(self):
        p = make_problem("emission", 0.1, 20.0)
        _, r0, _ = bloch_trajectories(p, p.zero_controls())
        assert r0[-1, 2] > 0.85
        assert np.all(np.diff(r0[:, 2]) > 0)

    def test_transverse_leaves_h0_fixed(self):
        p = make_problem("transverse", 0.1, 3.0)
        _, r0, _ = bloch_trajectories(p, p.zero_controls())
        np.testing.assert_array_equal(r0, np.tile([1.0, 0.0, 0.0], (len(r0), 1)))

    def test_noiseless_h0_is_exactly_static(self):
        p = make_problem("parallel", 0.0, 2.0)
        times, r0, r1 = bloch_trajectories(p, p.zero_controls())
        assert times[0] == 0.0 and times[-1] == pytest.approx(2.0) and len(times) == 41
        assert np.all(r0 == np.array([1.0, 0.0, 0.0]))
        # H1 precesses about z at angular frequency 2
        np.testing.assert_allclose(r1[:, 0], np.cos(2 * times), atol=1e-12)
        np.testing.assert_allclose(r1[:, 1], np.sin(2 * times), atol=1e-12)

    def test_bloch_vectors_stay_in_ball(self, rng):
        for kind in KINDS:
            p = make_problem(kind, 0.3, 2.0)
            _, r0, r1 = bloch_trajectories(p, rng.normal(size=p.control_shape))
            assert np.linalg.norm(r0, axis=1).max() <= 1 + 1e-12
            assert np.linalg.norm(r1, axis=1).max() <= 1 + 1e-12


class TestProfile:
    def test_profile_matches_pointwise(self, rng):
        p = make_problem("transverse", 0.1, 2.0)
        u = rng.normal(size=p.control_shape)
        dws = [-0.2, 0.0, 0.15]
        prof = helstrom_profile(p, u, dws)
        for dw, pe in zip(dws, prof):
            assert pe == pytest.approx(error_probabilities(p.with_detuning(dw), u)[0], abs=1e-13)

    def test_default_window(self):
        assert default_evaluation_window(10.0) == pytest.approx((-np.pi / 20, np.pi / 20))


class TestSweep:
    def test_uncontrolled_sweep(self):
        spec = SweepSpec("T", (np.pi / 2, np.pi), kind="parallel", gamma=0.1, method="none")
        rows = run_sweep(spec)
        assert [r.value for r in rows] == [np.pi / 2, np.pi]
        for r in rows:
            assert r.pe_helstrom == pytest.approx(r.pe_uncontrolled, abs=1e-9)
            assert r.result is None and not r.controls.any()

    def test_optimized_sweep_beats_free_evolution(self):
        spec = SweepSpec("gamma", (0.05, 0.2), kind="emission", T=3.0, grape_options=FAST)
        for r in run_sweep(spec):
            assert r.pe_helstrom <= r.pe_uncontrolled + 1e-12
            assert r.controls.shape == (2, 60)

    def test_seeds_independent_of_jobs(self):
        spec = SweepSpec("detuning", (-0.1, 0.1), kind="parallel", T=2.0, restarts=3,
                         grape_options=GrapeOptions(max_iter=5), seed=4)
        serial = run_sweep(spec, jobs=1)
        parallel = run_sweep(spec, jobs=2)
        for a, b in zip(serial, parallel):
            assert a.result == b.result
        assert len(set(spec.point_seeds())) == 2

    def test_sweep_problem(self):
        spec = SweepSpec("T", (1.0,), dt=0.1)
        assert spec.problem(1.0).n_slices == 10
        spec = SweepSpec("detuning", (0.3,))
        assert spec.problem(0.3).detuning == 0.3

    @pytest.mark.parametrize("kwargs", [
        dict(parameter="T", values=()),
        dict(parameter="omega", values=(1.0,)),
        dict(parameter="gamma", values=(-0.1,)),
        dict(parameter="T", values=(0.0,)),
        dict(parameter="T", values=(np.nan,)),
        dict(parameter="T", values=(1.0,), method="krotov"),
        dict(parameter="T", values=(1.0,), restarts=0),
    ])
    def test_invalid_spec(self, kwargs):
        with pytest.raises(ValueError):
            SweepSpec(**kwargs)


class TestRobustness:
    def test_no_control_row_matches_free_evolution(self, rng):
        p = make_problem("transverse", 0.1, 3.0)
        u = {"optimal": rng.normal(size=p.control_shape), "robust": p.zero_controls()}
        rep = robustness_report(p, u, samples=5)
        assert rep.window == pytest.approx(default_evaluation_window(3.0))
        for dw, pe in zip(rep.detunings, rep.errors["none"]):
            assert pe == pytest.approx(uncontrolled_error("transverse", 0.1, 3.0, dw), abs=1e-6)
        np.testing.assert_array_equal(rep.errors["robust"], rep.errors["none"])
        assert rep.reduction() == pytest.approx(
            1 - rep.averages["robust"] / rep.averages["optimal"])

    def test_zero_width_window(self, rng):
        p = make_problem("parallel", 0.1, 2.0)
        u = rng.normal(size=p.control_shape)
        rep = robustness_report(p, {"optimal": u, "robust": u}, window=(0.0, 0.0))
        assert rep.detunings.tolist() == [0.0]
        assert rep.averages["optimal"] == pytest.approx(error_probabilities(p, u)[0], abs=1e-13)

    def test_invalid_report(self, rng):
        p = make_problem("parallel", 0.1, 2.0)
        u = p.zero_controls()
        with pytest.raises(ValueError, match="order"):
            robustness_report(p, {"optimal": u, "robust": u}, window=(0.1, -0.1))
        with pytest.raises(ValueError, match="robust"):
            robustness_report(p, {"optimal": u})

    def test_train_pulses(self):
        p = make_problem("parallel", 0.1, 2.0)
        optimal, robust = train_pulses(p, (-0.1, 0.1), 5, grape_options=FAST)
        robust_obj = Objective.for_problem(p, (-0.1, 0.1), 5)
        assert optimal.objective == pytest.approx(objective_value(p, optimal.controls), abs=1e-14)
        assert robust.objective == pytest.approx(
            objective_value(p, robust.controls, robust_obj), abs=1e-14)
