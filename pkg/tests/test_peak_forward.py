import math

import numpy as np
import pytest
from hypothesis import given

from peakmap import (
    InitialConditions, SirParams, analytic_state, peak_incidence, peak_incidence_tau,
    peak_prevalence, peak_prevalence_tau, simulate,
)
from peakmap.peak_forward import incidence_slope, incidence_value

from conftest import BASE_INIT, BASE_PARAMS, dense_prevalence_peak, epidemics


def test_base_prevalence_peak_matches_dense_simulation():
    pp = peak_prevalence(BASE_INIT, BASE_PARAMS)
    v, t = dense_prevalence_peak(BASE_INIT, BASE_PARAMS, dt=1e-4, horizon=15)
    assert pp.ppv == pytest.approx(v, abs=1e-9)
    assert pp.ppt == pytest.approx(t, abs=1e-3)


@given(epidemics())
def test_susceptible_equals_inverse_rho_at_prevalence_peak(ep):
    init, params = ep
    st_ = analytic_state(peak_prevalence_tau(init, params), init, params)
    assert st_.s == pytest.approx(params.gamma / params.beta, abs=1e-9)
    assert st_.i == pytest.approx(peak_prevalence(init, params).ppv, abs=1e-12)


def test_no_epidemic_branch():
    init = InitialConditions(0.5, 0.01, 0.49)
    pp = peak_prevalence(init, SirParams(1.0, 1.0))
    assert pp.no_epidemic and pp.ppt == 0.0 and pp.ppv == init.i


@given(epidemics())
def test_incidence_stationarity(ep):
    init, params = ep
    tau = peak_incidence_tau(init, params)
    if tau == 0.0:
        return
    assert incidence_slope(tau, init, params) == pytest.approx(0.0, abs=1e-12)
    h = 1e-5 * tau
    v0 = incidence_value(tau, init, params)
    assert v0 >= incidence_value(tau - h, init, params)
    assert v0 >= incidence_value(tau + h, init, params)


def test_boundary_peak_when_incidence_starts_falling():
    # beta S0 - beta I0 - gamma <= 0 means beta S I decreases from t = 0
    init = InitialConditions(0.6, 0.3, 0.1)
    params = SirParams(1.0, 0.4)
    pk = peak_incidence(init, params)
    assert pk.boundary and pk.pit == 0.0
    assert pk.piv == pytest.approx(params.beta * init.s * init.i)


def test_base_incidence_peak_one_week_after_rate_maximum():
    pk = peak_incidence(BASE_INIT, BASE_PARAMS)
    tr = simulate(BASE_INIT, BASE_PARAMS, 20, 1e-4)
    rate = BASE_PARAMS.beta * tr.s * tr.i
    k = int(np.argmax(rate))
    assert pk.piv == pytest.approx(rate[k], abs=1e-8)
    # the peak week is the rate maximum moved one weekly removal step along tau
    assert pk.pit - tr.times[k] == pytest.approx(1.0, abs=0.2)


def test_incidence_peak_precedes_prevalence_peak():
    pk = peak_incidence(BASE_INIT, BASE_PARAMS)
    assert peak_incidence_tau(BASE_INIT, BASE_PARAMS) < peak_prevalence_tau(BASE_INIT, BASE_PARAMS)
    assert pk.piv < peak_prevalence(BASE_INIT, BASE_PARAMS).ppv
