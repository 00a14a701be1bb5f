import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from peakmap import InitialConditions, SirParams

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("default")

BASE_INIT = InitialConditions(0.9, 0.05, 0.05)
BASE_PARAMS = SirParams(1.137, 0.446)


@st.composite
def initial_conditions(draw, s_lo=0.5, i_lo=1e-3, i_hi=0.1):
    s = draw(st.floats(s_lo, 0.98))
    i = draw(st.floats(i_lo, min(i_hi, 1.0 - s)))
    return InitialConditions(s, i, max(0.0, 1.0 - s - i))


@st.composite
def epidemics(draw, rs_lo=1.2, rs_hi=5.0):
    """(init, params) with R0 = rho * S0 in [rs_lo, rs_hi] and a modest gamma."""
    init = draw(initial_conditions())
    gamma = draw(st.floats(0.1, 1.5))
    rs = draw(st.floats(rs_lo, rs_hi))
    beta = rs * gamma / init.s
    return init, SirParams(beta, gamma)


def dense_prevalence_peak(init, params, dt=1e-3, horizon=200.0):
    """Brute-force argmax of a fine RK4 prevalence curve, refined by a parabola."""
    from peakmap import simulate

    tr = simulate(init, params, horizon, dt)
    k = int(np.argmax(tr.i))
    if 0 < k < len(tr) - 1:
        y0, y1, y2 = tr.i[k - 1:k + 2]
        den = y0 - 2 * y1 + y2
        off = 0.5 * (y0 - y2) / den if den != 0 else 0.0
        return y1 - 0.25 * (y0 - y2) * off, (k + off) * dt
    return tr.i[k], k * dt


def dense_weekly_incidence(init, params, dt=1e-3, weeks=100):
    """Weekly incidence beta S I (evaluated at the start of each week) from a fine RK4 run."""
    from peakmap import simulate

    tr = simulate(init, params, weeks, dt)
    step = int(round(1.0 / dt))
    s, i = tr.s[::step], tr.i[::step]
    return params.beta * s * i  # value at week t is the rate at the start of week t


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


__all__ = ["BASE_INIT", "BASE_PARAMS", "initial_conditions", "epidemics", "rel", "math"]
