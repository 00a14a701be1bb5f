"""Simulation study comparing the four incidence inversion methods.

Each replicate draws a (PPV, PPT) pair, maps it to (beta, gamma) through the
prevalence inverse, simulates the weekly incidence series to get the true
(PIV, PIT), inverts that peak with every method, re-simulates from each
estimate, and records the absolute peak errors and the solver wall time.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _numerics as nm
from .peak_forward import PeakIncidence, PeakPrevalence, peak_prevalence
from .peak_inverse import InverseMethod, incidence_to_params, prevalence_to_params, warmup
from .sir_core import InitialConditions
from .truncnorm import TruncatedBvn, symmetrize

HISTORICAL_MEAN = (0.0144, 17.9)
HISTORICAL_COV = ((0.000036, -0.0187), (-0.0187, 16.09))
DEFAULT_INIT = (0.9, 0.0002, 0.0998)
FINE_DT = 1e-2
SCAN_WEEKS = 100
METHODS = tuple(InverseMethod)
TABLE_LABELS = {
    InverseMethod.COMPUTE_INTEGRAL: "Compute Integral",
    InverseMethod.TAYLOR: "Taylor Approx.",
    InverseMethod.SINGLE_ODE: "Single ODE",
    InverseMethod.FULL_ODE: "Full ODE",
}


def worker_count(requested: int | None = None) -> int:
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("PEAKMAP_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


@dataclass(frozen=True)
class BenchConfig:
    n_reps: int = 1000
    seed: int = 20240066
    mu: tuple[float, float] = HISTORICAL_MEAN
    sigma: tuple = HISTORICAL_COV
    ppv_bounds: tuple[float, float] | None = None  # None -> (init.i0, 1)
    ppt_bounds: tuple[float, float] = (1.0, 35.0)
    init: InitialConditions = field(default_factory=lambda: InitialConditions(*DEFAULT_INIT))
    methods: tuple[InverseMethod, ...] = METHODS
    taylor_as_printed: bool = False
    workers: int | None = None

    def __post_init__(self):
        if self.n_reps < 1:
            raise ValueError("n_reps must be at least 1")
        if not isinstance(self.init, InitialConditions):
            object.__setattr__(self, "init", InitialConditions(*self.init))
        object.__setattr__(
            self, "sigma", tuple(map(tuple, symmetrize(self.sigma).tolist()))
        )
        object.__setattr__(
            self, "methods", tuple(InverseMethod.parse(m) for m in self.methods)
        )
        # builds the distribution to validate sigma and the bounds
        self.distribution()

    @property
    def ppv_interval(self) -> tuple[float, float]:
        return self.ppv_bounds if self.ppv_bounds is not None else (self.init.i, 1.0)

    def distribution(self) -> TruncatedBvn:
        lo_v, hi_v = self.ppv_interval
        lo_t, hi_t = self.ppt_bounds
        return TruncatedBvn(self.mu, np.array(self.sigma), (lo_v, lo_t), (hi_v, hi_t))

    @classmethod
    def from_mapping(cls, data: dict) -> "BenchConfig":
        data = dict(data)
        if "init" in data and not isinstance(data["init"], InitialConditions):
            data["init"] = InitialConditions(*data["init"])
        for key in ("mu", "ppv_bounds", "ppt_bounds"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        if "sigma" in data:
            data["sigma"] = tuple(map(tuple, data["sigma"]))
        if "methods" in data:
            data["methods"] = tuple(data["methods"])
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown bench config keys: {sorted(extra)}")
        return cls(**data)


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def sample_truncated_bvn(config: BenchConfig, rng: np.random.Generator) -> tuple[float, float]:
    ppv, ppt = config.distribution().sample(rng, 1)[0]
    return float(ppv), float(ppt)


def weekly_peak(init: InitialConditions, beta: float, gamma: float) -> tuple[float, int]:
    """Peak (value, week) of the weekly incidence series from a fine RK4 run."""
    value, week = nm.weekly_peak(init.s, init.i, init.r, beta, gamma, FINE_DT, SCAN_WEEKS)
    return float(value), int(week)


@dataclass
class ReplicateResult:
    index: int
    ppv: float
    ppt: float
    beta: float = math.nan
    gamma: float = math.nan
    piv: float = math.nan
    pit: int = -1
    status: str = "ok"
    piv_error: dict = field(default_factory=dict)
    pit_error: dict = field(default_factory=dict)
    runtime: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)


def run_replicate(config: BenchConfig, index: int) -> ReplicateResult:
    rng = replicate_rng(config.seed, index)
    ppv, ppt = sample_truncated_bvn(config, rng)
    rep = ReplicateResult(index=index, ppv=ppv, ppt=ppt)
    init = config.init
    try:
        params = prevalence_to_params(PeakPrevalence(ppv, ppt), init)
    except ValueError as exc:
        rep.status = f"prevalence inverse failed: {exc}"
        return rep
    rep.beta, rep.gamma = params.beta, params.gamma

    # the sampled truth must survive the forward map before anything is timed
    check = peak_prevalence(init, params)
    if not (abs(check.ppv - ppv) < 1e-9 and abs(check.ppt - ppt) < 1e-6):
        rep.status = "forward check failed"
        return rep

    piv, pit = weekly_peak(init, params.beta, params.gamma)
    rep.piv, rep.pit = piv, pit
    lo, hi = 1.0, 35.0
    if not (lo < pit < hi):
        rep.status = f"true peak week {pit} outside ({lo:g}, {hi:g})"
        return rep

    target = PeakIncidence(piv=piv, pit=float(pit))
    for method in config.methods:
        try:
            res = incidence_to_params(
                target, init, method, taylor_as_printed=config.taylor_as_printed
            )
        except (ValueError, RuntimeError) as exc:
            rep.failures[method.value] = f"{type(exc).__name__}: {exc}"
            continue
        est_piv, est_pit = weekly_peak(init, res.params.beta, res.params.gamma)
        rep.piv_error[method.value] = abs(est_piv - piv)
        rep.pit_error[method.value] = abs(est_pit - pit)
        rep.runtime[method.value] = res.wall_time
    return rep


@dataclass
class MethodSummary:
    mean_piv_error: float
    sd_piv_error: float
    mean_pit_error: float
    sd_pit_error: float
    mean_runtime: float
    sd_runtime: float
    n_success: int
    n_failures: int


@dataclass
class BenchReport:
    methods: dict  # method value -> MethodSummary
    n_reps: int
    n_valid_truth: int
    seed: int
    replicates: list = field(default_factory=list, repr=False)

    def to_dict(self, include_runtime: bool = True, include_replicates: bool = False) -> dict:
        out = {
            "n_reps": self.n_reps,
            "n_valid_truth": self.n_valid_truth,
            "seed": self.seed,
            "methods": {},
        }
        for name, summ in self.methods.items():
            d = asdict(summ)
            if not include_runtime:
                d.pop("mean_runtime")
                d.pop("sd_runtime")
            out["methods"][name] = d
        if include_replicates:
            reps = [asdict(r) for r in self.replicates]
            if not include_runtime:
                for r in reps:
                    r.pop("runtime")
            out["replicates"] = reps
        return out

    def to_json(self, include_runtime: bool = True, **kw) -> str:
        return json.dumps(self.to_dict(include_runtime, **kw), indent=2, sort_keys=True)

    def to_table(self) -> str:
        names = [m for m in self.methods]
        labels = [TABLE_LABELS[InverseMethod(m)] for m in names]
        rows = [
            ("Avg. PIV Error", "mean_piv_error", "{:.3e}"),
            ("Std. Dev. PIV Error", "sd_piv_error", "{:.3e}"),
            ("Avg. PIT Error", "mean_pit_error", "{:.3f}"),
            ("Std. Dev. PIT Error", "sd_pit_error", "{:.3f}"),
            ("Avg. Runtime", "mean_runtime", "{:.3e}"),
            ("Std. Dev. Runtime", "sd_runtime", "{:.3e}"),
            ("Successes", "n_success", "{:d}"),
            ("Failures", "n_failures", "{:d}"),
        ]
        width0 = max(len(r[0]) for r in rows) + 2
        widths = [max(len(lab), 11) + 2 for lab in labels]
        lines = ["Quantity".ljust(width0) + "".join(l.rjust(w) for l, w in zip(labels, widths))]
        lines.append("-" * len(lines[0]))
        for title, key, fmt in rows:
            cells = []
            for name, w in zip(names, widths):
                v = getattr(self.methods[name], key)
                cells.append(("nan" if isinstance(v, float) and math.isnan(v) else fmt.format(v)).rjust(w))
            lines.append(title.ljust(width0) + "".join(cells))
        lines.append(
            f"({self.n_valid_truth} of {self.n_reps} replicates had a usable true peak; seed {self.seed})"
        )
        return "\n".join(lines)


def _stats(values) -> tuple[float, float]:
    if len(values) == 0:
        return math.nan, math.nan
    arr = np.asarray(values, dtype=float)
    sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return float(arr.mean()), sd


def summarize(config: BenchConfig, reps: list[ReplicateResult]) -> BenchReport:
    valid = [r for r in reps if r.status == "ok"]
    methods = {}
    for method in config.methods:
        key = method.value
        done = [r for r in valid if key in r.piv_error]
        mp, sp = _stats([r.piv_error[key] for r in done])
        mt, st = _stats([r.pit_error[key] for r in done])
        mr, sr = _stats([r.runtime[key] for r in done])
        methods[key] = MethodSummary(
            mean_piv_error=mp, sd_piv_error=sp,
            mean_pit_error=mt, sd_pit_error=st,
            mean_runtime=mr, sd_runtime=sr,
            n_success=len(done),
            n_failures=len(valid) - len(done),
        )
    return BenchReport(
        methods=methods, n_reps=config.n_reps, n_valid_truth=len(valid),
        seed=config.seed, replicates=reps,
    )


def run_benchmark(config: BenchConfig, progress=None) -> BenchReport:
    """Run every replicate (concurrently when more than one worker is allowed)."""
    warmup()
    workers = worker_count(config.workers)
    indices = range(config.n_reps)
    if workers == 1:
        reps = []
        for k in indices:
            reps.append(run_replicate(config, k))
            if progress:
                progress(k + 1, config.n_reps)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reps = list(pool.map(lambda k: run_replicate(config, k), indices))
    return summarize(config, reps)
