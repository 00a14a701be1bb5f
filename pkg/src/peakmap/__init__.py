"""Peak-informed SIR parameter maps and a Dirichlet-Beta forecasting model."""

from .peak_forward import (
    PeakIncidence,
    PeakPrevalence,
    peak_incidence,
    peak_incidence_tau,
    peak_prevalence,
    peak_prevalence_tau,
)
from .peak_inverse import (
    InfeasiblePeakError,
    InverseConvergenceError,
    InverseMethod,
    InverseResult,
    incidence_to_params,
    prevalence_to_params,
)
from .sir_core import (
    EpidemicDomainError,
    InitialConditions,
    SirParams,
    SirState,
    Trajectory,
    analytic_state,
    rk4_step,
    simulate,
    tau_of_time,
    time_of_tau,
)

__version__ = "0.1.0"

__all__ = [
    "PeakIncidence", "PeakPrevalence", "peak_incidence", "peak_incidence_tau",
    "peak_prevalence", "peak_prevalence_tau", "InfeasiblePeakError",
    "InverseConvergenceError", "InverseMethod", "InverseResult", "incidence_to_params",
    "prevalence_to_params", "EpidemicDomainError", "InitialConditions", "SirParams",
    "SirState", "Trajectory", "analytic_state", "rk4_step", "simulate", "tau_of_time",
    "time_of_tau",
]
