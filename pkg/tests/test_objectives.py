import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhtcontrol.core import SIGMA_X, SIGMA_Z, CollapseOperator
from qhtcontrol.discrimination import Priors, fixed_local_error, hs_objective
from qhtcontrol.objectives import (
    Objective,
    detuning_samples,
    evaluate,
    finite_difference_gradient,
    objective_gradient,
    objective_value,
)
from qhtcontrol.problem import DiscriminationProblem, TimeGrid
from qhtcontrol.propagation import evolve
from qhtcontrol.scenarios import KINDS, make_problem


def rel_err(g, ref):
    return np.abs(g - ref).max() / np.abs(ref).max()


class TestValue:
    def test_quarter_period_is_perfectly_distinguishable(self):
        p = make_problem("parallel", 0.0, np.pi / 2)
        assert objective_value(p, p.zero_controls()) == pytest.approx(1.0, abs=1e-12)

    def test_half_period_is_indistinguishable(self):
        p = make_problem("parallel", 0.0, np.pi)
        assert objective_value(p, p.zero_controls()) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("kind", KINDS)
    def test_matches_final_states(self, rng, kind):
        p = make_problem(kind, 0.2, 1.5, detuning=0.05)
        u = rng.normal(size=p.control_shape)
        rho0, _ = evolve(p, 0, u)
        rho1, _ = evolve(p, 1, u)
        assert objective_value(p, u) == pytest.approx(hs_objective(rho0, rho1), abs=1e-13)
        fl = make_problem(kind, 0.2, 1.5, detuning=0.05, measurement="fixed_local",
                          priors=Priors(0.3, 0.7))
        assert objective_value(fl, u) == pytest.approx(
            fixed_local_error(rho0, rho1, priors=Priors(0.3, 0.7)), abs=1e-13)

    def test_single_zero_sample_equals_nominal(self, rng):
        p = make_problem("transverse", 0.1, 2.0)
        u = rng.normal(size=p.control_shape)
        robust = Objective(detunings=(0.0,))
        assert objective_value(p, u, robust) == objective_value(p, u)

    def test_robust_value_is_sample_mean(self, rng):
        p = make_problem("emission", 0.1, 2.0)
        u = rng.normal(size=p.control_shape)
        obj = Objective.for_problem(p, (-0.1, 0.1), 5)
        each = [objective_value(p.with_detuning(d), u) for d in obj.detunings]
        assert objective_value(p, u, obj) == pytest.approx(np.mean(each), abs=1e-14)

    def test_detuning_samples(self):
        d, w = detuning_samples((-0.1, 0.1), 21)
        assert len(d) == 21 and d[10] == 0.0 and w.sum() == pytest.approx(1.0)
        d, w = detuning_samples((0.0, 0.0), 21)
        assert d.tolist() == [0.0] and w.tolist() == [1.0]
        with pytest.raises(ValueError):
            detuning_samples((0.1, -0.1), 3)

    def test_invalid_objective(self):
        with pytest.raises(ValueError, match="measure"):
            Objective(measure="fidelity")
        with pytest.raises(ValueError):
            Objective(weights=(1.0,))
        with pytest.raises(ValueError):
            Objective(detunings=(0.0, 0.1), weights=(0.7, 0.7))


class TestGradient:
    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("measurement", ["helstrom", "fixed_local"])
    def test_exact_matches_finite_differences(self, rng, kind, measurement):
        p = make_problem(kind, rng.uniform(0.05, 0.3), 1.0, measurement=measurement,
                         detuning=rng.uniform(-0.1, 0.1))
        u = rng.normal(size=p.control_shape)
        fd = finite_difference_gradient(p, u)
        assert rel_err(objective_gradient(p, u), fd) < 1e-6

    def test_robust_gradient_is_weighted_mean(self, rng):
        p = make_problem("transverse", 0.1, 1.0)
        u = rng.normal(size=p.control_shape)
        d, _ = detuning_samples((-0.1, 0.1), 4)
        w = np.array([0.1, 0.2, 0.3, 0.4])
        obj = Objective(detunings=tuple(d), weights=tuple(w))
        each = sum(wi * objective_gradient(p.with_detuning(di), u) for di, wi in zip(d, w))
        np.testing.assert_allclose(objective_gradient(p, u, obj), each, atol=1e-14)
        assert rel_err(objective_gradient(p, u, obj), finite_difference_gradient(p, u, obj)) < 1e-6

    def test_truncated_error_scales_with_dt_squared(self, rng):
        p = make_problem("emission", 0.2, 2.0, n_slices=40)
        u = rng.normal(size=p.control_shape)
        errs = []
        for factor in (1, 2, 4):
            q = p.with_grid(TimeGrid(2.0, 40 * factor))
            v = np.repeat(u, factor, axis=1)
            errs.append(rel_err(objective_gradient(q, v, mode="truncated"),
                                objective_gradient(q, v)))
        assert 3.5 < errs[0] / errs[1] < 4.5
        assert 3.5 < errs[1] / errs[2] < 4.5

    def test_zero_control_hamiltonian_gives_zero_gradient(self, rng):
        p = DiscriminationProblem(
            hamiltonians=(np.zeros((2, 2)), SIGMA_Z),
            collapses=(CollapseOperator(SIGMA_X, 0.05),),
            control_hamiltonians=(np.zeros((2, 2)),),
            control_labels=("null",),
            grid=TimeGrid(1.0, 10),
        )
        u = rng.normal(size=p.control_shape)
        for mode in ("exact", "truncated"):
            np.testing.assert_array_equal(objective_gradient(p, u, mode=mode), 0.0)
        np.testing.assert_array_equal(finite_difference_gradient(p, u), 0.0)

    def test_commuting_toy_slope(self):
        # one slice of length t, sigma_z drift and sigma_z control, |+-> POVM:
        # Bloch angles 2ut and 2(1+u)t give
        # P_e = [(1 - cos 2ut) + (1 + cos 2(1+u)t)] / 4
        t, u0 = 0.3, 0.4
        p = DiscriminationProblem(
            hamiltonians=(np.zeros((2, 2)), SIGMA_Z), collapses=(),
            control_hamiltonians=(SIGMA_Z,), control_labels=("z",), grid=TimeGrid(t, 1),
            measurement="fixed_local")
        slope = 0.5 * t * (np.sin(2 * u0 * t) - np.sin(2 * (1 + u0) * t))
        u = np.array([[u0]])
        assert objective_gradient(p, u)[0, 0] == pytest.approx(slope, abs=1e-12)
        assert finite_difference_gradient(p, u)[0, 0] == pytest.approx(slope, abs=1e-9)

    def test_time_reversal_antisymmetry_of_y_gradient(self):
        # zero control, parallel dephasing, quarter period: reversing the
        # slice order flips the sign of the y-gradient
        p = make_problem("parallel", 0.1, np.pi / 2, n_slices=40)
        g = objective_gradient(p, p.zero_controls())
        np.testing.assert_allclose(g[1], -g[1][::-1], atol=1e-12)

    def test_unknown_mode(self, rng):
        p = make_problem("parallel", 0.1, 1.0, n_slices=5)
        with pytest.raises(ValueError, match="gradient mode"):
            objective_gradient(p, p.zero_controls(), mode="adjoint")

    def test_rejects_bad_step(self):
        p = make_problem("parallel", 0.1, 1.0, n_slices=5)
        with pytest.raises(ValueError):
            finite_difference_gradient(p, p.zero_controls(), step=0.0)


@settings(max_examples=20, deadline=None)
@given(kind=st.sampled_from(KINDS), gamma=st.floats(0.0, 0.5), T=st.floats(0.2, 3.0),
       amp=st.floats(0.0, 3.0), seed=st.integers(0, 2**32 - 1))
def test_value_bounds(kind, gamma, T, amp, seed):
    p = make_problem(kind, gamma, T, n_slices=10)
    u = amp * np.random.default_rng(seed).normal(size=p.control_shape)
    value, _, _ = evaluate(p, u, Objective())
    assert -1e-12 <= value <= 1.0 + 1e-12
