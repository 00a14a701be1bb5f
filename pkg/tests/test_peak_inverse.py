import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from peakmap import (
    InfeasiblePeakError, InitialConditions, InverseMethod, SirParams, incidence_to_params,
    peak_incidence, peak_prevalence, prevalence_to_params,
)
from peakmap import _numerics as nm
from peakmap.peak_forward import PeakIncidence, PeakPrevalence

from conftest import BASE_INIT, BASE_PARAMS, epidemics, rel


def test_prevalence_fig1_round_trip():
    p = prevalence_to_params(peak_prevalence(BASE_INIT, BASE_PARAMS), BASE_INIT)
    assert rel(p.beta, BASE_PARAMS.beta) < 1e-6
    assert rel(p.gamma, BASE_PARAMS.gamma) < 1e-6


@given(epidemics(rs_lo=1.05))
def test_prevalence_round_trip(ep):
    init, params = ep
    pp = peak_prevalence(init, params)
    assume(pp.ppt > 0.05)
    p = prevalence_to_params(pp, init)
    assert rel(p.beta, params.beta) < 1e-8
    assert rel(p.gamma, params.gamma) < 1e-8


def test_prevalence_infeasible():
    with pytest.raises(InfeasiblePeakError):
        prevalence_to_params(PeakPrevalence(0.01, 5.0), BASE_INIT)  # below i0
    with pytest.raises(InfeasiblePeakError):
        prevalence_to_params(PeakPrevalence(0.97, 5.0), BASE_INIT)  # above S0 + I0


def test_method_parsing():
    assert InverseMethod.parse("ComputeIntegral") is InverseMethod.COMPUTE_INTEGRAL
    assert InverseMethod.parse("full_ode") is InverseMethod.FULL_ODE
    assert InverseMethod.parse("single-ode") is InverseMethod.SINGLE_ODE
    with pytest.raises(ValueError):
        InverseMethod.parse("secant")


def test_incidence_fig1_round_trip():
    pk = peak_incidence(BASE_INIT, BASE_PARAMS)
    r = incidence_to_params(pk, BASE_INIT)
    assert rel(r.params.beta, BASE_PARAMS.beta) < 1e-8
    assert rel(r.params.gamma, BASE_PARAMS.gamma) < 1e-8
    assert abs(r.residual_piv) < 1e-10 and abs(r.residual_pit) < 1e-9  # solver tolerance 1e-10


def test_cli_example_peak():
    r = incidence_to_params(PeakIncidence(0.018, 15.0), BASE_INIT, "compute-integral")
    fwd = peak_incidence(BASE_INIT, r.params)
    assert fwd.piv == pytest.approx(0.018, abs=1e-12)
    assert fwd.pit == pytest.approx(15.0, abs=1e-9)


@st.composite
def interior_peaks(draw):
    init, params = draw(epidemics(rs_lo=1.3, rs_hi=4.0))
    pk = peak_incidence(init, params)
    # seasonal-influenza scale; very fast, very large epidemics can put two roots
    # closer together than any finite scan resolves
    assume(not pk.boundary and 3.0 < pk.pit < 34.0 and pk.piv < 0.2)
    return init, params, pk


@given(interior_peaks())
def test_incidence_round_trip_reproduces_peak(case):
    init, params, pk = case
    r = incidence_to_params(pk, init, check_feasible=False)
    fwd = peak_incidence(init, r.params)
    assert fwd.piv == pytest.approx(pk.piv, abs=1e-9)
    assert fwd.pit == pytest.approx(pk.pit, abs=1e-7)
    # the smallest-beta root is returned, so the truth can only be matched or undercut
    assert r.params.beta <= params.beta * (1 + 1e-7)


@given(interior_peaks())
def test_branch_solver_agrees_with_newton(case):
    init, _, pk = case
    r = incidence_to_params(pk, init, check_feasible=False)
    lb, lg, _, ok = nm.solve_branch(
        nm.COMPUTE_INTEGRAL, pk.piv, pk.pit, init.s, init.i, init.r, False, np.nan, 60
    )
    assert ok
    assert math.exp(lb) == pytest.approx(r.params.beta, rel=1e-7)
    assert math.exp(lg) == pytest.approx(r.params.gamma, rel=1e-7)


def test_smallest_beta_root_with_tiny_seed():
    # with very few initial infections a second, faster epidemic can share the peak
    init = InitialConditions(0.9, 0.0002, 0.0998)
    truth = SirParams(1.5, 1.2)
    pk = peak_incidence(init, truth)
    r = incidence_to_params(pk, init)
    fwd = peak_incidence(init, r.params)
    assert fwd.piv == pytest.approx(pk.piv, abs=1e-9)
    assert r.params.beta <= truth.beta * (1 + 1e-7)


@pytest.mark.parametrize("method,pit_tol", [
    (InverseMethod.FULL_ODE, 1e-3),
    (InverseMethod.SINGLE_ODE, 1e-3),
    (InverseMethod.TAYLOR, 1.0),
])
def test_approximate_methods_land_near_the_peak(method, pit_tol):
    pk = peak_incidence(BASE_INIT, BASE_PARAMS)
    r = incidence_to_params(pk, BASE_INIT, method)
    assert r.method is method
    assert abs(r.residual_pit) < pit_tol
    assert abs(r.residual_piv) < 1e-2


def test_incidence_infeasible_inputs():
    with pytest.raises(InfeasiblePeakError):
        incidence_to_params(PeakIncidence(0.9, 15.0), BASE_INIT)
    with pytest.raises(InfeasiblePeakError):
        incidence_to_params(PeakIncidence(0.01, 40.0), BASE_INIT)


def test_branch_residual_sign_change_brackets_root():
    pk = peak_incidence(BASE_INIT, BASE_PARAMS)
    x_true = math.log(BASE_PARAMS.rho * BASE_INIT.s)
    f_lo = nm.branch_residual(nm.COMPUTE_INTEGRAL, x_true - 0.05, pk.piv, pk.pit, *BASE_INIT.as_tuple(), False)[0]
    f_hi = nm.branch_residual(nm.COMPUTE_INTEGRAL, x_true + 0.05, pk.piv, pk.pit, *BASE_INIT.as_tuple(), False)[0]
    f0 = nm.branch_residual(nm.COMPUTE_INTEGRAL, x_true, pk.piv, pk.pit, *BASE_INIT.as_tuple(), False)[0]
    assert f_lo * f_hi < 0
    assert abs(f0) < 1e-8
