import math

import numpy as np
import pytest

from qsolsim.dynamics import RHSCoefficients, propagate
from qsolsim.integrator import (
    IntegrationError,
    StepControl,
    StepSizeUnderflow,
    integrate,
    integrate_fixed,
    step,
)
from qsolsim.state import GridSpec, thermal_state
from qsolsim.tableaus import DORMAND_PRINCE_54, DORMAND_PRINCE_853, Tableau


class TestTableaus:
    @pytest.mark.parametrize("tab", [DORMAND_PRINCE_54, DORMAND_PRINCE_853])
    def test_consistency_conditions(self, tab):
        assert np.all(np.triu(tab.a) == 0.0)
        assert tab.b.sum() == pytest.approx(1.0, abs=1e-13)
        assert np.allclose(tab.a.sum(axis=1), tab.c, atol=1e-13)
        assert abs(tab.error_weights.sum()) < 1e-12
        assert tab.bhat.shape == (tab.n_stages + 1,)

    def test_rejects_implicit_tableau(self):
        with pytest.raises(ValueError):
            Tableau(name="bad", order=1, error_order=1,
                    a=np.array([[0.5]]), b=np.array([1.0]), c=np.array([0.5]),
                    error_weights=np.array([0.0, 0.0]))


class TestStep:
    def test_constant_solution_zero_error(self):
        y0 = np.array([1.0, -2.0])
        res = step(lambda t, y: np.zeros_like(y), 0.0, y0, 0.5,
                   DORMAND_PRINCE_853, StepControl())
        assert res.accepted
        assert res.error_norm == 0.0
        assert np.array_equal(res.y_new, y0)

    def test_never_accepts_above_tolerance(self):
        # a deliberately huge step on a stiff-ish problem must be rejected
        res = step(lambda t, y: -50.0 * y, 0.0, np.array([1.0]), 2.0,
                   DORMAND_PRINCE_54, StepControl(atol=1e-12, rtol=1e-12))
        assert not res.accepted
        assert res.h_next < 2.0
        assert np.array_equal(res.y_new, [1.0])  # state untouched on rejection

    def test_rejects_nonpositive_step(self):
        with pytest.raises(ValueError):
            step(lambda t, y: y, 0.0, np.array([1.0]), 0.0,
                 DORMAND_PRINCE_853, StepControl())


class TestIntegrate:
    def test_scalar_exponential(self):
        res = integrate(lambda t, y: -y, np.array([1.0]), 0.0, 1.0)
        assert res.y[0] == pytest.approx(math.exp(-1.0), rel=1e-9)

    def test_reaches_end_exactly(self):
        res = integrate(lambda t, y: np.cos(t) * y, np.array([1.0]), 0.0, 2.7182)
        assert res.t == 2.7182

    def test_zero_duration(self):
        res = integrate(lambda t, y: -y, np.array([3.0]), 0.0, 0.0, output_times=[0.0])
        assert res.t == 0.0 and res.y[0] == 3.0
        assert len(res.outputs) == 1

    def test_output_times_hit_exactly(self):
        seen = []
        integrate(lambda t, y: -y, np.array([1.0]), 0.0, 1.0,
                  output_times=[0.25, 0.5, 0.75, 1.0],
                  observer=lambda t, y: seen.append((t, y[0])))
        assert [t for t, _ in seen] == [0.25, 0.5, 0.75, 1.0]
        for t, val in seen:
            assert val == pytest.approx(math.exp(-t), rel=1e-9)

    def test_deterministic_trajectories(self):
        def fun(t, y):
            return np.array([y[1], -y[0] * (1 + 0.1 * np.sin(t))])

        a = integrate(fun, np.array([1.0, 0.0]), 0.0, 10.0, output_times=[5.0, 10.0])
        b = integrate(fun, np.array([1.0, 0.0]), 0.0, 10.0, output_times=[5.0, 10.0])
        assert a.y.tobytes() == b.y.tobytes()
        assert all(x.tobytes() == y.tobytes() for x, y in zip(a.outputs, b.outputs))

    def test_tolerance_halving_never_hurts(self):
        # on a linear problem the final error must not grow when both
        # tolerances are halved repeatedly
        def fun(t, y):
            return np.array([-0.3 * y[0] + 2.0 * y[1], -2.0 * y[0] - 0.3 * y[1]])

        y0 = np.array([1.0, 0.5])
        exact = np.exp(-0.3 * 3.0) * np.array([
            y0[0] * math.cos(6.0) + y0[1] * math.sin(6.0),
            -y0[0] * math.sin(6.0) + y0[1] * math.cos(6.0),
        ])
        errs = []
        for k in range(4):
            tol = 1e-6 / 2 ** k
            res = integrate(fun, y0, 0.0, 3.0, control=StepControl(atol=tol, rtol=tol))
            errs.append(np.max(np.abs(res.y - exact)))
        assert all(e2 <= e1 * 1.05 + 1e-15 for e1, e2 in zip(errs, errs[1:]))

    def test_underflow_aborts_with_time(self):
        # derivative explodes near t = 0.5; the controller must give up
        def fun(t, y):
            return y / (0.5 - t)

        with pytest.raises((StepSizeUnderflow, IntegrationError)) as err:
            integrate(fun, np.array([1.0]), 0.0, 1.0,
                      control=StepControl(atol=1e-10, rtol=1e-10, max_rejects=2000))
        assert err.value.t <= 0.5 + 1e-6

    def test_complex_state_support(self):
        res = integrate(lambda t, y: 1j * y, np.array([1.0 + 0.0j]), 0.0, math.pi)
        assert res.y[0] == pytest.approx(-1.0 + 0.0j, abs=1e-9)


class TestConvergenceOrder:
    @pytest.mark.parametrize("tab,min_slope", [
        (DORMAND_PRINCE_54, 4.6),
        (DORMAND_PRINCE_853, 7.5),
    ])
    def test_step_halving_slope(self, tab, min_slope):
        # Richardson study on y' = cos(t) y, exact solution exp(sin(t));
        # step ranges keep the finest error above the round-off floor
        def fun(t, y):
            return np.cos(t) * y

        t_end = 6.0
        exact = math.exp(math.sin(t_end))
        errors = []
        steps = [4, 8, 16, 32] if tab is DORMAND_PRINCE_853 else [16, 32, 64, 128]
        for n in steps:
            y = integrate_fixed(fun, np.array([1.0]), 0.0, t_end, n, tab)
            errors.append(abs(y[0] - exact))
        slopes = [math.log2(e1 / e2) for e1, e2 in zip(errors, errors[1:])]
        assert max(slopes) >= min_slope
        assert slopes[-1] >= min_slope * 0.95


class TestCumulantSystemIntegration:
    def test_thermal_state_stays_put(self):
        grid = GridSpec(m=24, dx=0.1)
        state = thermal_state(grid, 1e-16, 0.0)
        coeffs = RHSCoefficients(d2=-50.0, chi_t=1e-7, gamma_t=5.8e-3,
                                 delta_omega_t=0.0, n_th=1e-16, s=0.0)
        states, _ = propagate(state, coeffs, 10.0, output_times=[10.0])
        drift = max(
            np.max(np.abs(states[0].cu - state.cu)),
            np.max(np.abs(states[0].cv - state.cv)),
            np.max(np.abs(states[0].cuu - state.cuu)),
            np.max(np.abs(states[0].cuv - state.cuv)),
            np.max(np.abs(states[0].cvv - state.cvv)),
        )
        assert drift < 1e-8

    def test_linear_single_mode_matches_analytic(self):
        grid = GridSpec(m=1, dx=1.0)
        gamma, dw = 0.3, 1.1
        coeffs = RHSCoefficients(d2=0.0, chi_t=0.0, gamma_t=gamma,
                                 delta_omega_t=dw, n_th=0.0, s=1.0)
        state = thermal_state(grid, 0.0, 1.0)
        state = type(state)(grid, 1.0, 0.0, np.array([2.0]), np.array([-1.0]),
                            state.cuu, state.cuv, state.cvv)
        states, _ = propagate(state, coeffs, 2.0, output_times=[2.0],
                              control=StepControl(atol=1e-12, rtol=1e-12))
        final = states[0].cu[0] + 1j * states[0].cv[0]
        expected = (2.0 - 1.0j) * np.exp(-(gamma + 1j * dw) * 2.0)
        assert abs(final - expected) < 1e-8

    def test_periodic_linear_modes_follow_stencil_dispersion(self):
        # oracle: eigenmodes of the circulant stencil rotate at
        # 2 d2 (1 - cos(k dx)) and decay at gamma; checked mode by mode
        m, dx = 16, 0.25
        grid = GridSpec(m=m, dx=dx, boundary="periodic")
        gamma, d2 = 0.07, -4.0
        coeffs = RHSCoefficients(d2=d2, chi_t=0.0, gamma_t=gamma,
                                 delta_omega_t=0.0, n_th=0.0, s=1.0)
        rng = np.random.default_rng(2)
        cu = rng.normal(size=m)
        cv = rng.normal(size=m)
        base = thermal_state(grid, 0.0, 1.0)
        state = type(base)(grid, 1.0, 0.0, cu, cv, base.cuu, base.cuv, base.cvv)
        t_end = 0.8
        states, _ = propagate(state, coeffs, t_end, output_times=[t_end],
                              control=StepControl(atol=1e-12, rtol=1e-12))
        a0 = np.fft.fft(cu + 1j * cv)
        a1 = np.fft.fft(states[0].cu + 1j * states[0].cv)
        k = 2.0 * math.pi * np.fft.fftfreq(m, d=dx)
        rates = 2.0 * d2 * (1.0 - np.cos(k * dx))
        expected = a0 * np.exp(-gamma * t_end) * np.exp(-1j * rates * t_end)
        assert np.max(np.abs(a1 - expected)) < 1e-7 * np.max(np.abs(a0))


def test_step_statistics_recorded():
    res = integrate(lambda t, y: -y, np.array([1.0]), 0.0, 5.0)
    stats = res.stats.as_dict()
    assert stats["accepted_steps"] > 0
    assert stats["rhs_evaluations"] > stats["accepted_steps"]
    assert stats["smallest_step"] > 0
