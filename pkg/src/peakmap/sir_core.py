"""Deterministic SIR machinery.

Numeric propagation (RK4 or the weekly difference form), the closed-form
solution on the reparameterised ``tau`` axis, and the maps between ``tau``
and calendar time (weeks).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _numerics as nm

SIMPLEX_TOL = 1e-9


class EpidemicDomainError(ValueError):
    """Raised when a tau value lies outside the epidemic (negative prevalence)."""


@dataclass(frozen=True)
class SirParams:
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("beta", "gamma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        if not math.isfinite(self.rho):
            raise ValueError("beta/gamma is not finite")

    @property
    def rho(self) -> float:
        return self.beta / self.gamma


@dataclass(frozen=True)
class SirState:
    s: float
    i: float
    r: float

    def __post_init__(self):
        for name in ("s", "i", "r"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name}={v!r} is not a proportion")
        if abs(self.s + self.i + self.r - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"state ({self.s}, {self.i}, {self.r}) does not sum to 1")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.s, self.i, self.r)


@dataclass(frozen=True)
class InitialConditions(SirState):
    """State at t = 0; an epidemic must be seeded (i > 0)."""

    def __post_init__(self):
        super().__post_init__()
        if not self.i > 0:
            raise ValueError("initial prevalence i0 must be positive")

    @property
    def s0(self) -> float:
        return self.s

    @property
    def i0(self) -> float:
        return self.i

    @property
    def r0(self) -> float:
        return self.r


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n, 3) columns s, i, r
    incidence: np.ndarray

    @property
    def s(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def i(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def r(self) -> np.ndarray:
        return self.states[:, 2]

    @property
    def prevalence(self) -> np.ndarray:
        return self.states[:, 1]

    def state(self, k: int) -> SirState:
        s, i, r = self.states[k]
        return SirState(float(s), float(i), float(r))

    def __len__(self):
        return len(self.times)


def rk4_step(state: SirState, params: SirParams, dt: float) -> SirState:
    """Advance ``state`` by ``dt`` with one classical RK4 step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    s, i, r = nm.rk4_step(state.s, state.i, state.r, params.beta, params.gamma, dt)
    # clip the last few ulps so the result is always a valid SirState
    return SirState(min(max(s, 0.0), 1.0), min(max(i, 0.0), 1.0), min(max(r, 0.0), 1.0))


def simulate(
    init: InitialConditions,
    params: SirParams,
    horizon: float,
    dt: float = 1.0,
    scheme: str = "rk4",
) -> Trajectory:
    """Trajectory on the grid {0, dt, ..., horizon}.

    ``scheme="rk4"`` integrates the ODEs; ``scheme="discrete"`` uses the
    weekly difference form I_t = I_{t-1} + beta S_{t-1} I_{t-1} dt - gamma I_{t-1} dt.
    incidence[k] = beta * s[k-1] * i[k-1] * dt, and incidence[0] = i0 (the
    seeding cases).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not horizon >= dt:
        raise ValueError("horizon must be at least dt")
    n = int(math.floor(horizon / dt + 1e-9))
    if scheme == "rk4":
        states = nm.rk4_path(init.s, init.i, init.r, params.beta, params.gamma, dt, n)
    elif scheme == "discrete":
        states = nm.discrete_path(init.s, init.i, init.r, params.beta, params.gamma, dt, n)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    times = np.arange(n + 1) * dt
    incidence = np.empty(n + 1)
    incidence[0] = init.i
    incidence[1:] = params.beta * states[:-1, 0] * states[:-1, 1] * dt
    return Trajectory(times=times, states=states, incidence=incidence)


def analytic_state(tau: float, init: InitialConditions, params: SirParams) -> SirState:
    """Closed-form state at removal-time ``tau``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    b, g = params.beta, params.gamma
    s = init.s * math.exp(-b * tau)
    i = nm.prevalence_tau(tau, init.s, init.i, b, g)
    if i < 0:
        raise EpidemicDomainError(f"tau={tau} is beyond the final-size bound")
    r = init.r + g * tau
    return SirState(s, i, min(r, 1.0))


def final_size_tau(init: InitialConditions, params: SirParams) -> float:
    """The tau at which prevalence reaches zero (S_inf = S0 exp(-rho (R_inf - R0)))."""
    return float(nm.final_tau(init.s, init.i, params.beta, params.gamma))


def time_of_tau(tau: float, init: InitialConditions, params: SirParams) -> float:
    """Weeks needed to reach ``tau``: adaptive GK15 quadrature of 1/I on [0, tau]."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if tau == 0:
        return 0.0
    b, g = params.beta, params.gamma
    if not nm.prevalence_tau(tau, init.s, init.i, b, g) > 0:
        raise EpidemicDomainError(
            f"tau={tau} reaches the final-size bound; the time integral diverges"
        )
    value, err, _, status = nm.time_integral(
        0.0, tau, init.s, init.i, b, g, nm.QUAD_ATOL, nm.QUAD_MAXSUB
    )
    if status == 2:
        raise EpidemicDomainError("nonpositive prevalence inside the integration range")
    return float(value)


def tau_of_time(
    t: float, init: InitialConditions, params: SirParams, dt: float = nm.SINGLE_ODE_DT
) -> float:
    """Inverse of :func:`time_of_tau`, via RK4 on the removed-compartment ODE."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return float(nm.tau_by_single_ode(t, init.s, init.i, init.r, params.beta, params.gamma, dt))
