"""Metropolis-within-Gibbs fitting of the DBSSM and posterior containers."""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..bench import worker_count
from ..ingest import Y_MAX, Y_MIN, clamp
from ..sir_core import InitialConditions
from . import _chain
from .config import TARGETS, DbssmConfig
from .model import deterministic_path, peak_to_params, sample_prior

log = logging.getLogger(__name__)

RHAT_LIMIT = 1.1
START_ATTEMPTS = 20
SCALARS = ("beta", "gamma", "lambda", "iota", "piv", "pit")
BLOCK_NAMES = ("z", "theta0", "lambda", "iota", "theta_path", "z_fixed_path", "iota_rescaled", "theta0_fixed_path", "joint")
_GL_X, _GL_W = np.polynomial.legendre.leggauss(200)


class PosteriorInitError(RuntimeError):
    """The starting state of a chain has a non-finite posterior."""


def split_rhat(draws) -> float:
    """Split-R-hat for an (n_chains, n_draws) array."""
    x = np.asarray(draws, dtype=float)
    if x.ndim != 2 or x.shape[1] < 4:
        raise ValueError("need an (n_chains, n_draws >= 4) array")
    half = x.shape[1] // 2
    parts = np.concatenate([x[:, :half], x[:, -half:]], axis=0)
    n = parts.shape[1]
    means = parts.mean(axis=1)
    w = parts.var(axis=1, ddof=1).mean()
    b = n * means.var(ddof=1)
    if w == 0:
        return 1.0 if b == 0 else np.inf
    var_plus = (n - 1) / n * w + b / n
    return float(np.sqrt(var_plus / w))


@dataclass
class PosteriorSamples:
    chain: np.ndarray
    iteration: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    lam: np.ndarray
    iota: np.ndarray
    piv: np.ndarray
    pit: np.ndarray
    theta0: np.ndarray  # (N, 3)
    theta_last: np.ndarray  # (N, 3): theta at the last observed week
    t_obs: int
    target: str = "incidence"
    paths: np.ndarray | None = field(default=None, repr=False)  # (N, t_obs + 1, 3)
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.beta)

    @property
    def n_chains(self) -> int:
        return int(self.chain.max()) + 1 if len(self.chain) else 0

    def scalar(self, name: str) -> np.ndarray:
        return {"beta": self.beta, "gamma": self.gamma, "lambda": self.lam, "iota": self.iota,
                "piv": self.piv, "pit": self.pit}[name]

    def by_chain(self, name: str) -> np.ndarray:
        """(n_chains, draws_per_chain) view of one scalar, chains in order."""
        x = self.scalar(name)
        m = self.n_chains
        order = np.lexsort((self.iteration, self.chain))
        return x[order].reshape(m, -1)

    def rhat(self) -> dict:
        return {name: split_rhat(self.by_chain(name)) for name in SCALARS}

    def quantiles(self, name: str, q=(0.025, 0.5, 0.975)) -> np.ndarray:
        return np.quantile(self.scalar(name), q)

    def to_csv(self, path: str | Path) -> Path:
        """Write the draws CSV and a ``.json`` diagnostics sidecar next to it."""
        path = Path(path)
        cols = ["chain", "iter", "beta", "gamma", "lambda", "iota", "piv", "pit",
                "theta0_s", "theta0_i", "theta0_r", "thetaT_s", "thetaT_i", "thetaT_r"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for k in range(len(self)):
                w.writerow(
                    [int(self.chain[k]), int(self.iteration[k])]
                    + [repr(float(v)) for v in (self.beta[k], self.gamma[k], self.lam[k],
                                                self.iota[k], self.piv[k], self.pit[k])]
                    + [repr(float(v)) for v in self.theta0[k]]
                    + [repr(float(v)) for v in self.theta_last[k]]
                )
        side = sidecar_path(path)
        side.write_text(json.dumps(
            {"t_obs": self.t_obs, "target": self.target, "diagnostics": self.diagnostics},
            indent=2, sort_keys=True, default=_jsonable,
        ))
        return side

    @classmethod
    def from_csv(cls, path: str | Path) -> "PosteriorSamples":
        path = Path(path)
        data = np.genfromtxt(path, delimiter=",", names=True)
        data = np.atleast_1d(data)
        side = sidecar_path(path)
        meta = json.loads(side.read_text()) if side.exists() else {}
        if "t_obs" not in meta:
            raise ValueError(f"missing sidecar {side} with t_obs")
        return cls(
            chain=data["chain"].astype(int),
            iteration=data["iter"].astype(int),
            beta=data["beta"], gamma=data["gamma"], lam=data["lambda"], iota=data["iota"],
            piv=data["piv"], pit=data["pit"],
            theta0=np.column_stack([data["theta0_s"], data["theta0_i"], data["theta0_r"]]),
            theta_last=np.column_stack([data["thetaT_s"], data["thetaT_i"], data["thetaT_r"]]),
            t_obs=int(meta["t_obs"]),
            target=meta.get("target", "incidence"),
            diagnostics=meta.get("diagnostics", {}),
        )


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_suffix(".json") if path.suffix != ".json" else path.with_suffix(".diag.json")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


@dataclass
class ChainStart:
    theta0: InitialConditions
    z: tuple[float, float]
    lam: float
    iota: float


def _moment_start(config: DbssmConfig) -> ChainStart:
    """theta0 at its prior mean, z at the prior mean (pulled inside the box), lambda and iota at theirs."""
    theta0 = InitialConditions(*config.theta0_mean)
    zp = config.z_prior
    lo_t, hi_t = zp.pit_bounds
    piv = min(max(zp.mean[0], theta0.i * 1.5), zp.piv_upper * 0.99)
    pit = min(max(zp.mean[1], lo_t + 0.5), hi_t - 0.5)
    lam = config.lambda_prior[0] / config.lambda_prior[1]
    iota = config.iota_prior[0] / config.iota_prior[1]
    return ChainStart(theta0, (piv, pit), lam, iota)


def _chain_start(config: DbssmConfig, k: int, rng: np.random.Generator, attempt: int) -> ChainStart:
    if k == 0 and attempt == 0:
        start = _moment_start(config)
        try:
            peak_to_params(start.z, start.theta0, config)
            return start
        except (ValueError, RuntimeError):
            log.warning("moment-matched start is infeasible; chain 0 starts from a prior draw")
    d = sample_prior(config, rng)
    return ChainStart(d.theta0, d.z, d.lam, d.iota)


def validate_observations(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("y must be one-dimensional")
    if len(y) < 3:
        raise ValueError("need at least 3 observed weeks")
    if np.any(~np.isfinite(y)) or np.any(y < 0) or np.any(y > 1):
        raise ValueError("observations must be proportions in [0, 1]")
    y, moved = clamp(y)
    if moved:
        log.warning("%d observations clamped to [%g, %g]", moved, Y_MIN, Y_MAX)
    return y


def _run_one(y, config: DbssmConfig, k: int, seed_seq: np.random.SeedSequence):
    rng = np.random.default_rng(seed_seq)
    zp = config.z_prior
    mc = config.mcmc
    numba_seed = int(seed_seq.generate_state(1, dtype=np.uint32)[0])
    t0 = time.perf_counter()
    for attempt in range(START_ATTEMPTS):
        start = _chain_start(config, k, rng, attempt)
        try:
            params = peak_to_params(start.z, start.theta0, config)
        except (ValueError, RuntimeError):
            continue
        path0 = deterministic_path(start.theta0, params, len(y))
        out = _chain.run_chain(
            y, TARGETS.index(config.target), config.inverse_method.code,
            np.asarray(config.init_prior, dtype=float),
            float(config.lambda_prior[0]), float(config.lambda_prior[1]),
            float(config.iota_prior[0]), float(config.iota_prior[1]),
            np.asarray(zp.mean, dtype=float), zp.cov_array, float(zp.piv_upper),
            float(zp.pit_bounds[0]), float(zp.pit_bounds[1]), _GL_X, _GL_W,
            path0, float(start.z[0]), float(start.z[1]), float(start.lam), float(start.iota),
            int(mc.iterations), int(mc.burn_in), int(mc.thin), (numba_seed + attempt) % 2**32,
        )
        if out[-1] == 0:
            break
        log.info("chain %d: starting state %d has a non-finite posterior; redrawing", k, attempt)
    else:
        out = None
    return out, time.perf_counter() - t0


def fit(y, config: DbssmConfig, seed: int = 0) -> PosteriorSamples:
    """Run the configured chains on y_1..y_t' and pool the retained draws."""
    y = validate_observations(y)
    mc = config.mcmc
    seqs = np.random.SeedSequence(seed).spawn(mc.chains)
    workers = min(worker_count(mc.workers), mc.chains)
    if workers == 1:
        results = [_run_one(y, config, k, seqs[k]) for k in range(mc.chains)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda k: _run_one(y, config, k, seqs[k]), range(mc.chains)))

    cols = {name: [] for name in ("chain", "iteration", "scalars", "paths")}
    acc_rates = []
    inverse_calls = []
    wall = []
    for k, (out, secs) in enumerate(results):
        if out is None:
            raise PosteriorInitError(
                f"chain {k}: non-finite posterior at {START_ATTEMPTS} starting states"
            )
        scalars, paths, iters, accepted, tried, solves, status = out
        cols["chain"].append(np.full(len(iters), k))
        cols["iteration"].append(iters)
        cols["scalars"].append(scalars)
        cols["paths"].append(paths)
        acc_rates.append({
            name: float(accepted[b] / tried[b]) if tried[b] else float("nan")
            for b, name in enumerate(BLOCK_NAMES)
        })
        inverse_calls.append(dict(zip(("solves", "failed"), map(int, solves))))
        wall.append(secs)
    sc = np.concatenate(cols["scalars"])
    paths = np.concatenate(cols["paths"])
    samples = PosteriorSamples(
        chain=np.concatenate(cols["chain"]),
        iteration=np.concatenate(cols["iteration"]),
        beta=sc[:, _chain.C_BETA], gamma=sc[:, _chain.C_GAMMA],
        lam=sc[:, _chain.C_LAMBDA], iota=sc[:, _chain.C_IOTA],
        piv=sc[:, _chain.C_PIV], pit=sc[:, _chain.C_PIT],
        theta0=paths[:, 0, :].copy(), theta_last=paths[:, -1, :].copy(),
        t_obs=len(y), target=config.target, paths=paths,
    )
    diag = {
        "acceptance": acc_rates,
        "inverse_calls": inverse_calls,
        "wall_time": wall,
        "seed": seed,
        "mcmc": {"chains": mc.chains, "iterations": mc.iterations,
                 "burn_in": mc.burn_in, "thin": mc.thin},
        "warnings": [],
    }
    if mc.chains > 1 and mc.draws_per_chain >= 4:
        rh = samples.rhat()
        diag["rhat"] = rh
        bad = sorted(k for k, v in rh.items() if not v < RHAT_LIMIT)
        if bad:
            msg = f"split R-hat >= {RHAT_LIMIT} for {', '.join(bad)}"
            diag["warnings"].append(msg)
            log.warning(msg)
    samples.diagnostics = diag
    return samples

