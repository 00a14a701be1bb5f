"""Forward maps from (initial conditions, beta, gamma) to peak quantities."""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _numerics as nm
from .sir_core import EpidemicDomainError, InitialConditions, SirParams, time_of_tau


@dataclass(frozen=True)
class PeakPrevalence:
    ppv: float
    ppt: float
    no_epidemic: bool = False

    def __post_init__(self):
        if not (0 < self.ppv <= 1):
            raise ValueError(f"ppv={self.ppv} is not in (0, 1]")
        if not self.ppt >= 0:
            raise ValueError("ppt must be nonnegative")

    @property
    def ppt_week(self) -> int:
        return int(round(self.ppt))


@dataclass(frozen=True)
class PeakIncidence:
    piv: float
    pit: float
    boundary: bool = False

    def __post_init__(self):
        if not (0 < self.piv <= 1):
            raise ValueError(f"piv={self.piv} is not in (0, 1]")
        if not self.pit >= 0:
            raise ValueError("pit must be nonnegative")

    @property
    def pit_week(self) -> int:
        return int(round(self.pit))


def peak_prevalence_tau(init: InitialConditions, params: SirParams) -> float:
    """tau* = log(rho S0) / beta, or 0 when there is no interior peak."""
    return float(nm.peak_tau(init.s, params.beta, params.gamma))


def peak_prevalence(init: InitialConditions, params: SirParams) -> PeakPrevalence:
    rs = params.rho * init.s
    if rs <= 1.0:
        return PeakPrevalence(ppv=init.i, ppt=0.0, no_epidemic=True)
    rho = params.rho
    ppv = init.s + init.i - 1.0 / rho - math.log(rs) / rho
    tau_star = math.log(rs) / params.beta
    return PeakPrevalence(ppv=ppv, ppt=time_of_tau(tau_star, init, params))


def incidence_slope(tau: float, init: InitialConditions, params: SirParams) -> float:
    """Left side of the incidence stationarity condition at ``tau``.

    -(S0 + I0) + gamma tau + 2 S0 exp(-beta tau) - 1/rho; zero at the tau one
    week before peak incidence.
    """
    return float(nm.incidence_slope(tau, init.s, init.i, params.beta, params.gamma))


def incidence_value(tau: float, init: InitialConditions, params: SirParams) -> float:
    """beta * S(tau) * I(tau)."""
    b, g = params.beta, params.gamma
    return b * init.s * math.exp(-b * tau) * nm.prevalence_tau(tau, init.s, init.i, b, g)


def peak_incidence_tau(init: InitialConditions, params: SirParams) -> float:
    """Root of :func:`incidence_slope` on (0, tau*); 0 for a boundary peak."""
    return float(nm.incidence_peak_tau(init.s, init.i, params.beta, params.gamma))


def peak_incidence(init: InitialConditions, params: SirParams) -> PeakIncidence:
    """Peak weekly incidence value and time.

    The stationarity root gives the tau one week before the peak; one weekly
    removal step (tau += I) moves to the peak week, whose calendar time comes
    from the time integral.
    """
    piv, pit, _, boundary = nm.forward_incidence(init.s, init.i, params.beta, params.gamma)
    if boundary:
        return PeakIncidence(piv=min(piv, 1.0), pit=0.0, boundary=True)
    if not math.isfinite(pit):
        raise EpidemicDomainError("the weekly step past the incidence peak overshoots the final size")
    return PeakIncidence(piv=piv, pit=pit)
