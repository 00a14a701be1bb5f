"""Command-line interface.

    peakmap forward  --beta B --gamma G --s0 S --i0 I --r0 R
    peakmap invert   --piv V --pit T --s0 S --i0 I --r0 R [--method M]
    peakmap simulate --beta B --gamma G --s0 S --i0 I --r0 R [--horizon 35]
    peakmap bench    [--reps N] [--seed K] [--config FILE]
    peakmap fit      --data SEASON.csv [--weeks T] [--config FILE] --out POST.csv
    peakmap forecast --posterior POST.csv [--horizon 35] --out FC.csv
    peakmap zprior   --history PEAKS.csv | --surveillance ILI.csv

Values given as flags override the config file, which overrides the
built-in defaults. Exit status is 0 on success, 1 when a computation
rejects its input and 2 for malformed command lines.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bench import BenchConfig, load_config_file, run_benchmark
from .peak_forward import PeakIncidence, PeakPrevalence, peak_incidence, peak_prevalence
from .peak_inverse import InverseMethod, incidence_to_params, prevalence_to_params
from .sir_core import InitialConditions, SirParams, simulate

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2
METHOD_CHOICES = [m.value for m in InverseMethod]


class UsageError(Exception):
    """Malformed flags or missing input files; maps to exit status 2."""


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, config: bool = False) -> None:
    p.add_argument("--json", action="store_true", help="machine-readable JSON output")
    p.add_argument("--out", type=Path, help="write the result here instead of stdout")
    p.add_argument("--seed", type=int, help="random seed")
    if config:
        p.add_argument("--config", type=Path, help="TOML or JSON config file")


def _init_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--s0", type=float, required=True)
    p.add_argument("--i0", type=float, required=True)
    p.add_argument("--r0", type=float, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="peakmap", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", help="(beta, gamma) -> PPV, PPT, PIV, PIT")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    _init_flags(p)
    _common(p)

    p = sub.add_parser("invert", help="peak value and time -> (beta, gamma)")
    p.add_argument("--piv", type=float)
    p.add_argument("--pit", type=float)
    p.add_argument("--ppv", type=float)
    p.add_argument("--ppt", type=float)
    p.add_argument("--method", choices=METHOD_CHOICES, default=InverseMethod.COMPUTE_INTEGRAL.value)
    p.add_argument("--taylor-as-printed", action="store_true",
                   help="use the uncorrected Taylor coefficient")
    p.add_argument("--no-feasibility-check", action="store_true")
    _init_flags(p)
    _common(p)

    p = sub.add_parser("simulate", help="(beta, gamma) -> trajectory CSV")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--horizon", type=float, default=35.0)
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--scheme", choices=["rk4", "discrete"], default="rk4")
    _init_flags(p)
    _common(p)

    p = sub.add_parser("bench", help="inversion accuracy and runtime study")
    p.add_argument("--reps", type=int)
    p.add_argument("--methods", nargs="+", choices=METHOD_CHOICES)
    p.add_argument("--workers", type=int)
    p.add_argument("--taylor-as-printed", action="store_true", default=None)
    p.add_argument("--replicates", action="store_true", help="include per-replicate rows in JSON")
    _common(p, config=True)

    p = sub.add_parser("fit", help="fit the state-space model to one season")
    p.add_argument("--data", type=Path, required=True, help="season CSV with columns t, y")
    p.add_argument("--weeks", type=int, help="fit on the first WEEKS observations")
    p.add_argument("--zprior", type=Path, help="JSON written by the zprior command")
    p.add_argument("--method", choices=METHOD_CHOICES)
    p.add_argument("--target", choices=["incidence", "prevalence", "prevalence-prior"])
    p.add_argument("--chains", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--workers", type=int)
    _common(p, config=True)

    p = sub.add_parser("forecast", help="posterior predictive forecast bands")
    p.add_argument("--posterior", type=Path, required=True, help="CSV written by fit")
    p.add_argument("--horizon", type=int, default=35)
    _common(p)

    p = sub.add_parser("zprior", help="peak prior moments from past seasons")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--history", type=Path, help="CSV with columns peak_value, peak_week")
    src.add_argument("--surveillance", type=Path, help="CSV with season, epi_week, ili, flu_pos")
    p.add_argument("--piv-upper", type=float, default=1.0)
    _common(p)
    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _need_file(path: Path | None, flag: str) -> None:
    if path is not None and not path.is_file():
        raise UsageError(f"{flag}: no such file {path}")


def _config_section(path: Path | None, name: str) -> dict:
    """Mapping from the config file; a top-level table named ``name`` wins if present."""
    if path is None:
        return {}
    try:
        data = load_config_file(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"--config: cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("--config: top level must be a table")
    sec = data.get(name, data)
    if not isinstance(sec, dict):
        raise UsageError(f"--config: [{name}] must be a table")
    return dict(sec)


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.6g}" if math.isfinite(v) else str(v)
    return str(v)


def _kv_table(d: dict) -> str:
    w = max(len(k) for k in d) + 2
    return "\n".join(f"{k.ljust(w)}{_fmt(v)}" for k, v in d.items())


def _emit(text: str, out: Path | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands: each returns a zero-argument callable after validating flags
# ---------------------------------------------------------------------------

def _prep_forward(a):
    init = InitialConditions(a.s0, a.i0, a.r0)
    params = SirParams(a.beta, a.gamma)

    def run():
        pp = peak_prevalence(init, params)
        pi = peak_incidence(init, params)
        res = {"ppv": pp.ppv, "ppt": pp.ppt, "piv": pi.piv, "pit": pi.pit,
               "no_epidemic": pp.no_epidemic, "boundary": pi.boundary}
        _emit(_dumps(res) if a.json else _kv_table(
            {"PPV": res["ppv"], "PPT": res["ppt"], "PIV": res["piv"], "PIT": res["pit"]}
        ), a.out)
    return run


def _prep_invert(a):
    inc = a.piv is not None or a.pit is not None
    prev = a.ppv is not None or a.ppt is not None
    if inc == prev:
        raise UsageError("give either --piv/--pit or --ppv/--ppt")
    if inc and (a.piv is None or a.pit is None):
        raise UsageError("--piv and --pit go together")
    if prev and (a.ppv is None or a.ppt is None):
        raise UsageError("--ppv and --ppt go together")
    init = InitialConditions(a.s0, a.i0, a.r0)

    def run():
        if prev:
            params = prevalence_to_params(PeakPrevalence(a.ppv, a.ppt), init)
            fwd = peak_prevalence(init, params)
            res = {"kind": "prevalence", "beta": params.beta, "gamma": params.gamma,
                   "residual_ppv": fwd.ppv - a.ppv, "residual_ppt": fwd.ppt - a.ppt}
        else:
            r = incidence_to_params(
                PeakIncidence(a.piv, a.pit), init, a.method,
                taylor_as_printed=a.taylor_as_printed,
                check_feasible=not a.no_feasibility_check,
            )
            res = {"kind": "incidence", "method": r.method.value,
                   "beta": r.params.beta, "gamma": r.params.gamma,
                   "residual_piv": r.residual_piv, "residual_pit": r.residual_pit,
                   "iterations": r.iterations, "wall_time": r.wall_time}
        _emit(_dumps(res) if a.json else _kv_table(res), a.out)
    return run


def _prep_simulate(a):
    init = InitialConditions(a.s0, a.i0, a.r0)
    params = SirParams(a.beta, a.gamma)
    if not a.dt > 0 or not a.horizon >= a.dt:
        raise UsageError("need dt > 0 and horizon >= dt")

    def run():
        tr = simulate(init, params, a.horizon, a.dt, a.scheme)
        if a.json:
            _emit(_dumps({"t": tr.times.tolist(), "s": tr.s.tolist(), "i": tr.i.tolist(),
                          "r": tr.r.tolist(), "incidence": tr.incidence.tolist()}), a.out)
        else:
            rows = [[repr(float(v)) for v in row]
                    for row in zip(tr.times, tr.s, tr.i, tr.r, tr.incidence)]
            _emit(_csv_text(["t", "s", "i", "r", "incidence"], rows), a.out)
    return run


def _prep_bench(a):
    data = _config_section(a.config, "bench")
    flags = {"n_reps": a.reps, "seed": a.seed, "methods": a.methods,
             "workers": a.workers, "taylor_as_printed": a.taylor_as_printed}
    data.update({k: v for k, v in flags.items() if v is not None})
    config = BenchConfig.from_mapping(data)

    def run():
        report = run_benchmark(config)
        if a.json:
            _emit(report.to_json(include_replicates=a.replicates), a.out)
        else:
            _emit(report.to_table(), a.out)
    return run


def _load_season(path: Path, weeks: int | None) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"t", "y"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: season CSV needs columns t, y")
        rows = sorted((int(r["t"]), float(r["y"])) for r in reader)
    y = np.array([v for _, v in rows])
    if weeks is not None:
        if not 3 <= weeks <= len(y):
            raise ValueError(f"--weeks must lie in [3, {len(y)}]")
        y = y[:weeks]
    return y


def _prep_fit(a):
    from .dbssm import DbssmConfig, ZPrior, fit

    _need_file(a.data, "--data")
    _need_file(a.zprior, "--zprior")
    data = _config_section(a.config, "fit")
    config = DbssmConfig.from_mapping(data)
    if a.zprior is not None:
        zp = json.loads(a.zprior.read_text())
        config = replace(config, z_prior=ZPrior(
            mean=tuple(zp["mean"]), cov=tuple(map(tuple, zp["cov"])),
            piv_upper=zp.get("piv_upper", 1.0), pit_bounds=tuple(zp.get("pit_bounds", (1.0, 35.0))),
        ))
    if a.method is not None:
        config = replace(config, inverse_method=InverseMethod.parse(a.method))
    if a.target is not None:
        config = replace(config, target=a.target)
    mc = {"chains": a.chains, "iterations": a.iterations, "burn_in": a.burn_in,
          "thin": a.thin, "workers": a.workers}
    config = config.with_mcmc(**{k: v for k, v in mc.items() if v is not None})
    y = _load_season(a.data, a.weeks)
    seed = 0 if a.seed is None else a.seed

    def run():
        samples = fit(y, config, seed=seed)
        if a.out is not None:
            samples.to_csv(a.out)
        rh = samples.diagnostics.get("rhat", {})
        summary = {"t_obs": samples.t_obs, "n_draws": len(samples), "seed": seed,
                   "target": samples.target, "method": config.inverse_method.value,
                   "warnings": samples.diagnostics.get("warnings", []), "parameters": {}}
        for name in ("beta", "gamma", "lambda", "iota", "piv", "pit"):
            q = samples.quantiles(name)
            summary["parameters"][name] = {
                "mean": float(samples.scalar(name).mean()), "q025": float(q[0]),
                "q50": float(q[1]), "q975": float(q[2]), "rhat": float(rh.get(name, math.nan)),
            }
        if a.json:
            text = _dumps(summary)
        else:
            lines = [f"{'param':<8}{'mean':>12}{'q025':>12}{'q50':>12}{'q975':>12}{'rhat':>8}"]
            for name, d in summary["parameters"].items():
                lines.append(f"{name:<8}" + "".join(f"{d[k]:>12.5g}" for k in ("mean", "q025", "q50", "q975"))
                             + f"{d['rhat']:>8.3f}")
            lines += summary["warnings"]
            text = "\n".join(lines)
        # the posterior CSV occupies --out, so the summary always goes to stdout
        _emit(text, None)
    return run


def _prep_forecast(a):
    from .dbssm import PosteriorSamples, forecast

    _need_file(a.posterior, "--posterior")
    samples = PosteriorSamples.from_csv(a.posterior)
    if not a.horizon > samples.t_obs:
        raise ValueError(f"--horizon must exceed the {samples.t_obs} fitted weeks")
    rng = np.random.default_rng(0 if a.seed is None else a.seed)

    def run():
        fc = forecast(samples, samples.t_obs, a.horizon, rng, keep_draws=False)
        rows = fc.to_rows()
        if a.json:
            _emit(_dumps({"t_obs": samples.t_obs, "horizon": a.horizon, "rows": rows}), a.out)
        else:
            cols = list(rows[0])
            _emit(_csv_text(cols, [[r[c] if c == "week" else repr(r[c]) for c in cols]
                                   for r in rows]), a.out)
    return run


def _prep_zprior(a):
    from .dbssm import fit_z_prior
    from .ingest import ili_plus, load_history_csv, load_surveillance_csv, peak_history

    _need_file(a.history, "--history")
    _need_file(a.surveillance, "--surveillance")
    if a.history is not None:
        history = load_history_csv(a.history)
    else:
        history = peak_history([ili_plus(s) for s in load_surveillance_csv(a.surveillance)])

    def run():
        zp = fit_z_prior(history, piv_upper=a.piv_upper)
        res = {"mean": list(zp.mean), "cov": [list(r) for r in zp.cov],
               "piv_upper": zp.piv_upper, "pit_bounds": list(zp.pit_bounds),
               "n_seasons": len(history)}
        if a.json or a.out is not None:
            _emit(_dumps(res), a.out)
        else:
            _emit(_kv_table({"mean_piv": zp.mean[0], "mean_pit": zp.mean[1],
                             "var_piv": zp.cov[0][0], "cov": zp.cov[0][1],
                             "var_pit": zp.cov[1][1], "n_seasons": len(history)}), None)
    return run


PREP = {
    "forward": _prep_forward, "invert": _prep_invert, "simulate": _prep_simulate,
    "bench": _prep_bench, "fit": _prep_fit, "forecast": _prep_forecast, "zprior": _prep_zprior,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors itself
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(a, "out", None) is not None and not a.out.parent.is_dir():
        print(f"peakmap {a.command}: --out directory {a.out.parent} does not exist", file=sys.stderr)
        return EXIT_USAGE
    try:
        run = PREP[a.command](a)
    except UsageError as exc:
        print(f"peakmap {a.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError, KeyError, TypeError) as exc:
        print(f"peakmap {a.command}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    try:
        run()
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"peakmap {a.command}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
