"""Densities, prior draws and synthetic seasons for the DBSSM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..peak_forward import PeakIncidence, PeakPrevalence
from ..peak_inverse import (
    InfeasiblePeakError,
    InverseConvergenceError,
    incidence_to_params,
    prevalence_to_params,
)
from ..sir_core import InitialConditions, SirParams, SirState
from ..truncnorm import TruncatedBvn
from . import _chain
from .config import DbssmConfig

MAX_Z_REDRAWS = 100


def obs_loglik(y: float, incidence: float, lam: float) -> float:
    """log Beta(y; lam * m, lam * (1 - m)) with mean m = incidence."""
    if not (0.0 < incidence < 1.0):
        raise ValueError("incidence must lie in (0, 1)")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if not (0.0 <= y <= 1.0):
        raise ValueError("y must lie in [0, 1]")
    return float(_chain.obs_term(float(y), float(incidence), float(lam)))


def propagate(state: SirState, params: SirParams) -> tuple[float, float, float]:
    """f(theta): the SIR state one week later (one RK4 step)."""
    return _chain.propagate(state.s, state.i, state.r, params.beta, params.gamma)


def transition_logpdf(theta_next: SirState, theta_prev: SirState, params: SirParams, iota: float) -> float:
    """log Dirichlet(theta_next; iota * f(theta_prev)); -inf on a zero component."""
    if not iota > 0:
        raise ValueError("iota must be positive")
    f = propagate(theta_prev, params)
    return float(_chain.dirichlet_logpdf3(
        theta_next.s, theta_next.i, theta_next.r, iota * f[0], iota * f[1], iota * f[2]
    ))


def z_distribution(config: DbssmConfig, i0: float) -> TruncatedBvn:
    zp = config.z_prior
    return TruncatedBvn(
        zp.mean, zp.cov_array, (i0, zp.pit_bounds[0]), (zp.piv_upper, zp.pit_bounds[1])
    )


def peak_to_params(z: tuple[float, float], theta0: InitialConditions, config: DbssmConfig) -> SirParams:
    """h^{-1}: (beta, gamma) implied by z and theta0 under the configured target."""
    if config.prior_target == "prevalence":
        return prevalence_to_params(PeakPrevalence(z[0], z[1]), theta0)
    return incidence_to_params(PeakIncidence(z[0], z[1]), theta0, config.inverse_method).params


@dataclass(frozen=True)
class PriorDraw:
    theta0: InitialConditions
    z: tuple[float, float]
    params: SirParams
    lam: float
    iota: float


def sample_prior(config: DbssmConfig, rng: np.random.Generator) -> PriorDraw:
    """iota, lambda, theta0, then z | theta0, then (beta, gamma) = h^{-1}(z, theta0)."""
    iota = rng.gamma(config.iota_prior[0], 1.0 / config.iota_prior[1])
    lam = rng.gamma(config.lambda_prior[0], 1.0 / config.lambda_prior[1])
    s, i, r = rng.dirichlet(config.init_prior)
    theta0 = InitialConditions(float(s), float(i), float(1.0 - s - i))
    dist = z_distribution(config, theta0.i)
    for _ in range(MAX_Z_REDRAWS):
        z = tuple(float(v) for v in dist.sample(rng, 1)[0])
        try:
            params = peak_to_params(z, theta0, config)
        except (InfeasiblePeakError, InverseConvergenceError):
            continue
        return PriorDraw(theta0=theta0, z=z, params=params, lam=float(lam), iota=float(iota))
    raise InfeasiblePeakError(f"no feasible z after {MAX_Z_REDRAWS} redraws")


def deterministic_path(theta0: SirState, params: SirParams, weeks: int) -> np.ndarray:
    """theta_t = f(theta_{t-1}) for t = 1..weeks, as a (weeks+1, 3) array."""
    path = np.empty((weeks + 1, 3))
    path[0] = theta0.as_tuple()
    for t in range(1, weeks + 1):
        path[t] = _chain.propagate(*path[t - 1], params.beta, params.gamma)
    return path


def observation_means(path: np.ndarray, beta: float, target: str = "incidence") -> np.ndarray:
    """Mean of y_1..y_n given theta_0..theta_n."""
    if target != "prevalence":
        return beta * path[:-1, 0] * path[:-1, 1]
    return path[1:, 1].copy()


def generate_season(
    params: SirParams,
    theta0: SirState,
    lam: float,
    iota: float,
    weeks: int,
    rng: np.random.Generator,
    target: str = "incidence",
) -> tuple[np.ndarray, np.ndarray]:
    """Draw (y_1..y_weeks, theta_0..theta_weeks) from the generative model."""
    path = np.empty((weeks + 1, 3))
    path[0] = theta0.as_tuple()
    for t in range(1, weeks + 1):
        f = np.asarray(_chain.propagate(*path[t - 1], params.beta, params.gamma))
        draw = rng.dirichlet(iota * f)
        # keep every component strictly positive so the path stays in the density's support
        draw = np.maximum(draw, 1e-300)
        path[t] = draw / draw.sum()
    m = observation_means(path, params.beta, target)
    y = rng.beta(lam * m, lam * (1.0 - m))
    return y, path


def log_posterior(
    y: np.ndarray,
    path: np.ndarray,
    z: tuple[float, float],
    lam: float,
    iota: float,
    config: DbssmConfig,
    params: SirParams | None = None,
) -> float:
    """Unnormalized log posterior of one state (used by tests and diagnostics)."""
    theta0 = InitialConditions(*path[0])
    if params is None:
        params = peak_to_params(z, theta0, config)
    target = 0 if config.obs_target == "incidence" else 1
    y = np.asarray(y, dtype=float)
    lp = _chain.loglik_obs(y, path, params.beta, lam, target)
    lp += _chain.loglik_trans(path, params.beta, params.gamma, iota)
    lp += z_distribution(config, theta0.i).logpdf(z)
    a = config.init_prior
    lp += _chain.dirichlet_logpdf3(*path[0], *a)
    lp += _chain.gamma_logpdf(lam, *config.lambda_prior) + _chain.gamma_logpdf(iota, *config.iota_prior)
    return float(lp)


__all__ = [
    "obs_loglik", "transition_logpdf", "propagate", "sample_prior", "PriorDraw",
    "generate_season", "deterministic_path", "observation_means", "peak_to_params",
    "z_distribution", "log_posterior",
]
