import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from peakmap import (
    EpidemicDomainError, InitialConditions, SirParams, SirState, analytic_state,
    rk4_step, simulate, tau_of_time, time_of_tau,
)
from peakmap.sir_core import final_size_tau

from conftest import BASE_INIT, BASE_PARAMS, epidemics, initial_conditions


def test_state_validation():
    with pytest.raises(ValueError):
        SirState(0.5, 0.5, 0.1)
    with pytest.raises(ValueError):
        SirState(-0.1, 0.6, 0.5)
    with pytest.raises(ValueError):
        SirParams(0.0, 1.0)
    with pytest.raises(ValueError):
        SirParams(1.0, math.inf)


def test_rk4_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        rk4_step(BASE_INIT, BASE_PARAMS, 0.0)


def test_simulate_grid_and_seed_incidence():
    tr = simulate(BASE_INIT, BASE_PARAMS, 35)
    assert len(tr) == 36
    assert tr.times[-1] == 35.0
    assert tr.incidence[0] == BASE_INIT.i
    np.testing.assert_allclose(tr.incidence[1:], BASE_PARAMS.beta * tr.s[:-1] * tr.i[:-1])


@given(epidemics())
def test_mass_conserved_rk4(ep):
    init, params = ep
    tr = simulate(init, params, 35, 0.5)
    np.testing.assert_allclose(tr.states.sum(axis=1), 1.0, atol=1e-12)


@given(st.floats(0.1, 1.0), st.floats(0.1, 1.0), initial_conditions())
def test_mass_conserved_discrete(beta, gamma, init):
    # forward differences stay in the simplex while beta dt and gamma dt are at most 1
    tr = simulate(init, SirParams(beta, gamma), 35, 1.0, "discrete")
    np.testing.assert_allclose(tr.states.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(tr.states >= 0)


def test_base_prevalence_above_incidence():
    tr = simulate(BASE_INIT, BASE_PARAMS, 35)
    assert tr.prevalence[1:].max() > tr.incidence[1:].max()


def test_base_incidence_can_exceed_prevalence():
    tr = simulate(BASE_INIT, SirParams(2.592, 1.058), 35)
    assert np.any(tr.incidence[1:] > tr.prevalence[1:])


@given(st.floats(0.3, 6.0), initial_conditions(i_hi=0.3))
def test_reed_frost_identity(beta, init):
    # past beta I > 1 the difference equations leave the simplex and overflow
    with np.errstate(over="ignore", invalid="ignore"):
        tr = simulate(init, SirParams(beta, 1.0), 35, 1.0, "discrete")
    assume(np.all(np.isfinite(tr.states)))
    assert np.array_equal(tr.incidence[1:], tr.prevalence[1:])


@given(epidemics(), st.floats(0.05, 0.95))
def test_analytic_state_matches_ode(ep, frac):
    init, params = ep
    tau = frac * final_size_tau(init, params)
    t = time_of_tau(tau, init, params)
    n = max(1, int(math.ceil(t / 1e-3)))
    tr = simulate(init, params, t, t / n)
    exact = analytic_state(tau, init, params)
    np.testing.assert_allclose(tr.states[-1], exact.as_tuple(), atol=1e-8)


@given(epidemics(), st.floats(0.5, 20.0))
def test_tau_time_round_trip(ep, t):
    init, params = ep
    tau = tau_of_time(t, init, params)
    assert time_of_tau(tau, init, params) == pytest.approx(t, rel=1e-6)


def test_beyond_final_size_rejected():
    tau_inf = final_size_tau(BASE_INIT, BASE_PARAMS)
    analytic_state(0.999 * tau_inf, BASE_INIT, BASE_PARAMS)
    with pytest.raises(EpidemicDomainError):
        analytic_state(1.001 * tau_inf, BASE_INIT, BASE_PARAMS)
    with pytest.raises(EpidemicDomainError):
        time_of_tau(1.001 * tau_inf, BASE_INIT, BASE_PARAMS)


def test_final_size_relation():
    # S_inf = S0 exp(-rho (R_inf - R0))
    tau_inf = final_size_tau(BASE_INIT, BASE_PARAMS)
    st_ = analytic_state(tau_inf * (1 - 1e-12), BASE_INIT, BASE_PARAMS)
    rho = BASE_PARAMS.rho
    assert st_.s == pytest.approx(BASE_INIT.s * math.exp(-rho * (st_.r - BASE_INIT.r)), rel=1e-9)
    assert st_.i == pytest.approx(0.0, abs=1e-9)


def test_initial_conditions_require_infection():
    with pytest.raises(ValueError):
        InitialConditions(1.0, 0.0, 0.0)
