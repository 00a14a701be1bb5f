import json
from pathlib import Path

import numpy as np
import pytest

from peakmap.cli import main
from peakmap.dbssm import DbssmConfig, generate_season
from peakmap import InitialConditions, SirParams

GOLDEN = Path(__file__).parent / "golden"
INIT = ["--s0", "0.9", "--i0", "0.05", "--r0", "0.05"]


def schema(obj):
    """Keys and value types, recursively; lists of records by their first record."""
    if isinstance(obj, dict):
        return {k: schema(v) for k, v in sorted(obj.items())}
    if isinstance(obj, list):
        return [schema(obj[0])] if obj and isinstance(obj[0], dict) else "list"
    if isinstance(obj, bool):
        return "bool"
    if isinstance(obj, (int, float)):
        return "number"
    return type(obj).__name__


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def check_golden(name, obj):
    g = json.loads((GOLDEN / f"{name}.json").read_text())
    assert schema(obj) == g


def test_forward_json(capsys):
    code, out, _ = run(capsys, "forward", "--beta", "1.137", "--gamma", "0.446", *INIT, "--json")
    assert code == 0
    res = json.loads(out)
    check_golden("forward", res)
    assert res["piv"] < res["ppv"] and res["pit"] < res["ppt"]


def test_forward_table(capsys):
    code, out, _ = run(capsys, "forward", "--beta", "1.137", "--gamma", "0.446", *INIT)
    assert code == 0
    assert [line.split()[0] for line in out.splitlines()] == ["PPV", "PPT", "PIV", "PIT"]


def test_invert_json(capsys):
    code, out, _ = run(capsys, "invert", "--piv", "0.018", "--pit", "15", *INIT,
                       "--method", "compute-integral", "--json")
    assert code == 0
    res = json.loads(out)
    check_golden("invert", res)
    assert abs(res["residual_piv"]) < 1e-10 and abs(res["residual_pit"]) < 1e-9


def test_invert_prevalence(capsys):
    code, out, _ = run(capsys, "invert", "--ppv", "0.2", "--ppt", "6", *INIT, "--json")
    assert code == 0
    assert json.loads(out)["kind"] == "prevalence"


def test_exit_codes(capsys):
    # domain error: peak that no SIR curve reaches
    assert run(capsys, "invert", "--piv", "0.9", "--pit", "15", *INIT)[0] == 1
    # domain error: initial conditions off the simplex
    assert run(capsys, "forward", "--beta", "1", "--gamma", "1", "--s0", "0.9",
               "--i0", "0.5", "--r0", "0.05")[0] == 1
    # usage errors
    assert run(capsys, "forward", "--beta", "x", "--gamma", "1", *INIT)[0] == 2
    assert run(capsys, "invert", "--piv", "0.01", *INIT)[0] == 2
    assert run(capsys, "invert", "--piv", "0.01", "--pit", "3", *INIT, "--method", "secant")[0] == 2
    assert run(capsys, "fit", "--data", "missing.csv")[0] == 2
    assert run(capsys, "bogus")[0] == 2


def test_simulate_csv(capsys, tmp_path):
    out = tmp_path / "traj.csv"
    code, _, _ = run(capsys, "simulate", "--beta", "1.137", "--gamma", "0.446", *INIT,
                     "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,s,i,r,incidence" and len(lines) == 37


def test_bench_table_and_json(capsys, tmp_path):
    code, out, _ = run(capsys, "bench", "--reps", "3", "--seed", "7", "--workers", "1")
    assert code == 0
    assert "Avg. PIV Error" in out and "Compute Integral" in out
    code, out, _ = run(capsys, "bench", "--reps", "3", "--seed", "7", "--workers", "1", "--json")
    res = json.loads(out)
    check_golden("bench", res)
    code, out2, _ = run(capsys, "bench", "--reps", "3", "--seed", "7", "--workers", "1", "--json")
    a, b = json.loads(out2), res
    for m in a["methods"]:
        for k in ("mean_piv_error", "mean_pit_error"):
            assert a["methods"][m][k] == b["methods"][m][k]


def test_bench_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "bench.toml"
    cfg.write_text('[bench]\nn_reps = 2\nseed = 3\nmethods = ["taylor"]\nworkers = 1\n')
    code, out, _ = run(capsys, "bench", "--config", str(cfg), "--json")
    res = json.loads(out)
    assert (res["n_reps"], res["seed"], list(res["methods"])) == (2, 3, ["taylor"])
    code, out, _ = run(capsys, "bench", "--config", str(cfg), "--reps", "1", "--json")
    res = json.loads(out)
    assert (res["n_reps"], res["seed"]) == (1, 3)
    bad = tmp_path / "bad.json"
    bad.write_text('{"n_reps": 2, "colour": "red"}')
    assert run(capsys, "bench", "--config", str(bad))[0] == 1


def test_zprior(capsys, tmp_path):
    hist = tmp_path / "h.csv"
    hist.write_text("peak_value,peak_week\n0.02,15\n0.03,19\n0.015,22\n")
    out = tmp_path / "zp.json"
    code, _, _ = run(capsys, "zprior", "--history", str(hist), "--out", str(out))
    assert code == 0
    res = json.loads(out.read_text())
    check_golden("zprior", res)
    assert res["n_seasons"] == 3


def test_fit_and_forecast(capsys, tmp_path):
    rng = np.random.default_rng(4)
    theta0 = InitialConditions(*DbssmConfig().theta0_mean)
    y, _ = generate_season(SirParams(1.6, 1.25), theta0, 5000.0, 20000.0, 35, rng)
    data = tmp_path / "season.csv"
    data.write_text("t,y\n" + "".join(f"{t},{float(v)!r}\n" for t, v in enumerate(y, 1)))
    cfg = tmp_path / "fit.json"
    cfg.write_text(json.dumps({"mcmc": {"chains": 2, "iterations": 400, "burn_in": 100,
                                        "thin": 2, "workers": 1}}))
    post = tmp_path / "post.csv"
    code, out, err = run(capsys, "fit", "--data", str(data), "--weeks", "12", "--config", str(cfg),
                         "--iterations", "300", "--seed", "5", "--json", "--out", str(post))
    assert code == 0, err
    res = json.loads(out)
    check_golden("fit", res)
    assert res["t_obs"] == 12 and res["n_draws"] == 2 * (300 - 100) // 2

    fc = tmp_path / "fc.csv"
    code, _, err = run(capsys, "forecast", "--posterior", str(post), "--horizon", "35",
                       "--seed", "1", "--out", str(fc))
    assert code == 0, err
    lines = fc.read_text().splitlines()
    assert lines[0] == "week,mean,q025,q25,q50,q75,q975" and len(lines) == 1 + 23
    code, out, _ = run(capsys, "forecast", "--posterior", str(post), "--seed", "1", "--json")
    check_golden("forecast", json.loads(out))
    assert run(capsys, "forecast", "--posterior", str(post), "--horizon", "10")[0] == 1


def test_threads_env_caps_workers(monkeypatch):
    from peakmap.bench import worker_count
    monkeypatch.setenv("PEAKMAP_THREADS", "1")
    assert worker_count(8) == 1
    monkeypatch.delenv("PEAKMAP_THREADS")
    assert worker_count(3) == 3
