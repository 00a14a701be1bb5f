"""Posterior-predictive forecasts of the weekly series."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..ingest import Y_MAX, Y_MIN
from .sampler import PosteriorSamples

QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)
QUANTILE_NAMES = ("q025", "q25", "q50", "q75", "q975")


@dataclass
class Forecast:
    weeks: np.ndarray
    mean: np.ndarray
    quantiles: np.ndarray  # (len(weeks), 5)
    draws: np.ndarray | None = field(default=None, repr=False)  # (n_draws, len(weeks))

    def band(self, level: str = "95") -> tuple[np.ndarray, np.ndarray]:
        if level == "95":
            return self.quantiles[:, 0], self.quantiles[:, 4]
        if level == "50":
            return self.quantiles[:, 1], self.quantiles[:, 3]
        raise ValueError("level must be '95' or '50'")

    def to_rows(self) -> list[dict]:
        rows = []
        for k, w in enumerate(self.weeks):
            row = {"week": int(w), "mean": float(self.mean[k])}
            row.update({n: float(v) for n, v in zip(QUANTILE_NAMES, self.quantiles[k])})
            rows.append(row)
        return rows

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["week", "mean", *QUANTILE_NAMES])
            w.writeheader()
            for row in self.to_rows():
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def _rk4_week(s, i, r, beta, gamma):
    """Vectorized one-week RK4 step of the SIR system."""

    def rhs(s, i):
        inf = beta * s * i
        rec = gamma * i
        return -inf, inf - rec, rec

    k1 = rhs(s, i)
    k2 = rhs(s + 0.5 * k1[0], i + 0.5 * k1[1])
    k3 = rhs(s + 0.5 * k2[0], i + 0.5 * k2[1])
    k4 = rhs(s + k3[0], i + k3[1])
    s1 = s + (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6.0
    i1 = i + (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6.0
    r1 = r + (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]) / 6.0
    tot = s1 + i1 + r1
    return s1 / tot, i1 / tot, r1 / tot


def _dirichlet(rng, a):
    """Row-wise Dirichlet draws for an (n, 3) concentration array."""
    g = rng.standard_gamma(a)
    g = np.maximum(g, 1e-300)
    return g / g.sum(axis=1, keepdims=True)


def forecast(samples: PosteriorSamples, t_obs: int, horizon: int, rng: np.random.Generator,
             keep_draws: bool = True) -> Forecast:
    """Simulate y_{t'+1..T} from every retained draw and pool the draws."""
    if t_obs != samples.t_obs:
        raise ValueError(f"samples were fitted on {samples.t_obs} weeks, not {t_obs}")
    if not t_obs < horizon:
        raise ValueError("horizon must exceed the number of observed weeks")
    n = len(samples)
    h = horizon - t_obs
    s, i, r = (samples.theta_last[:, k].astype(float) for k in range(3))
    beta, gamma = samples.beta, samples.gamma
    lam, iota = samples.lam, samples.iota
    draws = np.empty((n, h))
    for k in range(h):
        if samples.target != "prevalence":
            m = beta * s * i
        fs, fi, fr = _rk4_week(s, i, r, beta, gamma)
        conc = iota[:, None] * np.column_stack([fs, fi, fr])
        nxt = _dirichlet(rng, np.maximum(conc, 1e-300))
        s, i, r = nxt[:, 0], nxt[:, 1], nxt[:, 2]
        if samples.target == "prevalence":
            m = i
        m = np.clip(m, 1e-12, 1 - 1e-12)
        draws[:, k] = rng.beta(lam * m, lam * (1.0 - m))
    draws = np.clip(draws, Y_MIN, Y_MAX)
    q = np.quantile(draws, QUANTILES, axis=0).T
    q = np.maximum.accumulate(q, axis=1)  # guard against rounding in interpolation
    return Forecast(
        weeks=np.arange(t_obs + 1, horizon + 1),
        mean=draws.mean(axis=0),
        quantiles=q,
        draws=draws if keep_draws else None,
    )


def read_forecast_csv(path: str | Path) -> Forecast:
    data = np.atleast_1d(np.genfromtxt(path, delimiter=",", names=True))
    q = np.column_stack([data[n] for n in QUANTILE_NAMES])
    return Forecast(weeks=data["week"].astype(int), mean=data["mean"], quantiles=q)
