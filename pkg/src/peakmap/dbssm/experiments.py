"""Synthetic-data experiments: calibration of the posterior and the
incidence-vs-prevalence prior comparison."""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from ..ingest import Y_MAX, Y_MIN
from ..sir_core import InitialConditions, SirParams
from .config import DbssmConfig, McmcConfig
from .forecast import forecast
from .model import PriorDraw, generate_season, sample_prior
from .sampler import fit

REDUCED_MCMC = McmcConfig(chains=4, iterations=10_000, burn_in=2_000, thin=5)
SEASON_WEEKS = 35
CALIBRATION_WEEKS = 25


def synthetic_season(config: DbssmConfig, rng: np.random.Generator, weeks: int = SEASON_WEEKS,
                     fit_weeks: int = CALIBRATION_WEEKS, max_tries: int = 1000):
    """Prior draw and season whose first ``fit_weeks`` values need no clamping."""
    for _ in range(max_tries):
        d = sample_prior(config, rng)
        y, path = generate_season(d.params, d.theta0, d.lam, d.iota, weeks, rng, config.target)
        head = y[:fit_weeks]
        if np.all((head >= Y_MIN) & (head <= Y_MAX)):
            return d, y, path
    raise RuntimeError(f"no unclamped season in {max_tries} draws")


@dataclass
class CalibrationCase:
    truth: PriorDraw
    beta_ci: tuple[float, float]
    gamma_ci: tuple[float, float]
    rhat: dict
    seconds: float

    @property
    def covers(self) -> tuple[bool, bool]:
        b, g = self.truth.params.beta, self.truth.params.gamma
        return (self.beta_ci[0] <= b <= self.beta_ci[1], self.gamma_ci[0] <= g <= self.gamma_ci[1])

    @property
    def max_rhat(self) -> float:
        return max(self.rhat.values())


def calibration_case(k: int, config: DbssmConfig | None = None,
                     fit_weeks: int = CALIBRATION_WEEKS, base_seed: int = 1000) -> CalibrationCase:
    """Draw truth k from the prior, simulate a season and fit its first weeks."""
    config = config or DbssmConfig(mcmc=REDUCED_MCMC)
    rng = np.random.default_rng(base_seed + k)
    d, y, _ = synthetic_season(config, rng, fit_weeks=fit_weeks)
    t0 = time.perf_counter()
    s = fit(y[:fit_weeks], config, seed=k)
    secs = time.perf_counter() - t0
    return CalibrationCase(
        truth=d,
        beta_ci=tuple(s.quantiles("beta", (0.025, 0.975))),
        gamma_ci=tuple(s.quantiles("gamma", (0.025, 0.975))),
        rhat=s.diagnostics["rhat"],
        seconds=secs,
    )


# gamma well away from 1 per week, where weekly incidence and prevalence peaks
# differ (at gamma = 1 the two series coincide and the targets cannot differ)
TARGET_TRUTH = SirParams(1.137, 0.446)
TARGET_CONCENTRATION = 5000.0
TARGET_WEEKS = 22


@dataclass
class PriorTargetCase:
    truth: SirParams
    median_incidence: tuple[float, float]  # (beta, gamma)
    median_prevalence: tuple[float, float]
    next_y: float
    pred_incidence: float  # posterior predictive mean of y_{t'+1}
    pred_prevalence: float
    rhat_incidence: dict
    rhat_prevalence: dict


def prior_target_case(k: int, config: DbssmConfig | None = None, fit_weeks: int = TARGET_WEEKS,
                      base_seed: int = 5000) -> PriorTargetCase:
    """Fit one incidence season under the incidence peak prior and under the same
    prior read as a prevalence peak.

    The likelihood is the incidence one in both fits, so only the prior differs.
    The season is simulated from ``TARGET_TRUTH`` with theta0 at the prior mean.
    """
    inc = replace(config or DbssmConfig(mcmc=REDUCED_MCMC), target="incidence")
    prev = replace(inc, target="prevalence-prior")
    rng = np.random.default_rng(base_seed + k)
    theta0 = InitialConditions(*inc.theta0_mean)
    y, _ = generate_season(TARGET_TRUTH, theta0, TARGET_CONCENTRATION, TARGET_CONCENTRATION,
                           fit_weeks + 1, rng)
    out = {}
    for name, cfg in (("incidence", inc), ("prevalence", prev)):
        s = fit(y[:fit_weeks], cfg, seed=k)
        fc = forecast(s, fit_weeks, fit_weeks + 1, np.random.default_rng(base_seed + k),
                      keep_draws=False)
        out[name] = (
            (float(np.median(s.beta)), float(np.median(s.gamma))),
            float(fc.mean[0]),
            s.diagnostics["rhat"],
        )
    return PriorTargetCase(
        truth=TARGET_TRUTH,
        median_incidence=out["incidence"][0],
        median_prevalence=out["prevalence"][0],
        next_y=float(y[fit_weeks]),
        pred_incidence=out["incidence"][1],
        pred_prevalence=out["prevalence"][1],
        rhat_incidence=out["incidence"][2],
        rhat_prevalence=out["prevalence"][2],
    )
