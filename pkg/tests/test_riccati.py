import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from nmqsd.errors import FDiverged, NotSupercritical
from nmqsd.noise import Exponential, SingleMode
from nmqsd.trajectory import (FCoefficient, critical_time, solve_F,
                              solve_F_or_raise, subcritical_asymptote)

PLATEAU_4_1 = 2 - math.sqrt(2)      # (4 - sqrt(8)) / 2


def reference_F(params, times):
    """Independent high-accuracy integration of the Riccati equation."""
    def rhs(t, y):
        f = y[0] + 1j * y[1]
        d = params.rhs(f)
        return [d.real, d.imag]
    sol = solve_ivp(rhs, (times[0], times[-1]), [0.0, 0.0], t_eval=times,
                    method="DOP853", rtol=1e-12, atol=1e-14)
    return sol.y[0] + 1j * sol.y[1]


def test_initial_value_zero():
    p = FCoefficient.from_params(1.0, 1.0, 1.0, 1.0)
    assert solve_F(p, np.linspace(0, 1, 11)).values[0] == 0
    assert p.value(0.0) == 0


def test_subcritical_rk4_vs_closed_form():
    p = FCoefficient.from_params(4.0, 1.0, 1.0, 1.0)
    t = np.arange(0, 20 + 5e-4, 1e-3)
    sol = solve_F(p, t)
    assert sol.divergence_time is None
    assert np.max(np.abs(sol.values - sol.closed_form)) < 1e-8
    assert abs(sol.values[-1] - PLATEAU_4_1) < 1e-6
    assert subcritical_asymptote(4.0, 1.0) == pytest.approx(PLATEAU_4_1, abs=1e-15)
    assert p.asymptote() == pytest.approx(PLATEAU_4_1)


def test_closed_form_matches_independent_integrator_off_resonance():
    p = FCoefficient.from_params(3.0, 0.4, 1.3, 0.8)
    t = np.linspace(0, 8, 161)
    np.testing.assert_allclose(p.value(t), reference_F(p, t), atol=1e-9)


def test_critical_time_examples():
    assert critical_time(1.0, 1.0) == pytest.approx(1.5 * math.pi, rel=1e-15)
    with pytest.raises(NotSupercritical):
        critical_time(2.0, 1.0)
    with pytest.raises(NotSupercritical):
        critical_time(3.0, 1.0)


@pytest.mark.parametrize("gamma", [1.0, 0.5, 1.5, 1.99])
def test_blowup_time_matches_formula(gamma):
    tc = critical_time(gamma, 1.0)
    p = FCoefficient.from_params(gamma, 1.0, 1.0, 1.0)
    sol = solve_F(p, np.arange(0, 1.5 * tc, 1e-3))
    assert sol.divergence_time is not None
    assert abs(sol.divergence_time - tc) / tc < 1e-3


def test_solve_or_raise():
    p = FCoefficient.from_params(1.0, 1.0, 1.0, 1.0)
    with pytest.raises(FDiverged) as info:
        solve_F_or_raise(p, np.arange(0, 6, 1e-3))
    assert info.value.time == pytest.approx(1.5 * math.pi, rel=1e-3)


def test_integrating_factor_is_exp_of_integral():
    p = FCoefficient.from_params(4.0, 0.5, 1.0, 1.0)
    t = np.linspace(0.3, 1.1, 2001)
    integral = np.trapezoid(p.value(t), t)
    assert p.step_factor(t[0], t[-1]) == pytest.approx(np.exp(-p.lam * integral), rel=1e-6)


def test_pole_detection():
    p = FCoefficient.from_params(1.0, 1.0, 1.0, 1.0)
    tc = 1.5 * math.pi
    assert p.pole_between(tc - 5e-4, tc + 5e-4)
    assert not p.pole_between(1.0, 1.001)


def test_from_kernel():
    p = FCoefficient.from_kernel(Exponential(2.0, 0.5), 0.7, 1.0)
    assert (p.weight, p.rate, p.freq) == (1.0, 2.0, 0.5)
    s = FCoefficient.from_kernel(SingleMode(0.5, 2.0), 0.1, 1.0)
    assert (s.weight, s.rate, s.freq) == (2.0, 0.0, 0.5)


@settings(max_examples=20, deadline=None)
@given(st.floats(2.2, 10), st.floats(0.2, 1.0))
def test_subcritical_bounded_by_asymptote(gamma_over, lam):
    gamma = gamma_over * lam ** 2
    p = FCoefficient.from_params(gamma, 1.0, 1.0, lam)
    vals = p.value(np.linspace(0, 30, 301))
    assert np.all(np.abs(vals.imag) < 1e-12)
    assert np.all(vals.real <= subcritical_asymptote(gamma, lam) + 1e-12)
