"""Dirichlet-Beta state-space model with a peak-incidence prior."""

from .config import DbssmConfig, McmcConfig, ZPrior
from .forecast import Forecast, forecast, read_forecast_csv
from .model import (
    PriorDraw,
    deterministic_path,
    generate_season,
    log_posterior,
    obs_loglik,
    observation_means,
    peak_to_params,
    propagate,
    sample_prior,
    transition_logpdf,
    z_distribution,
)
from .sampler import PosteriorInitError, PosteriorSamples, fit, split_rhat
from .zprior import fit_z_prior

__all__ = [
    "DbssmConfig", "McmcConfig", "ZPrior", "Forecast", "forecast", "read_forecast_csv",
    "PriorDraw", "deterministic_path", "generate_season", "log_posterior", "obs_loglik",
    "observation_means", "peak_to_params", "propagate", "sample_prior", "transition_logpdf",
    "z_distribution", "PosteriorInitError", "PosteriorSamples", "fit", "split_rhat",
    "fit_z_prior",
]
