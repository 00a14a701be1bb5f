import logging

import numpy as np
import pytest

from peakmap.ingest import (
    Season, SeasonWindowError, SurveillanceSeries, Y_MAX, Y_MIN, clamp, ili_plus,
    load_history_csv, load_surveillance_csv, peak_history, save_surveillance_csv, season_window,
)


def full_series(label="2015-16", start=30, n=60, rng=None):
    rng = rng or np.random.default_rng(0)
    weeks = [start]
    while len(weeks) < n:
        weeks.append(1 if weeks[-1] >= 52 else weeks[-1] + 1)
    ili = rng.uniform(0.01, 0.05, n)
    pos = rng.uniform(0.05, 0.4, n)
    return SurveillanceSeries(label, tuple(weeks), tuple(ili), tuple(pos))


def test_window_is_anchored_on_week_40():
    w = season_window()
    assert len(w) == 35
    assert w[0] == 40 and w[12] == 52 and w[13] == 1 and w[-1] == 22


def test_ili_plus_is_product_over_window():
    s = full_series()
    season = ili_plus(s)
    idx = [s.epi_weeks.index(w) for w in season_window()]
    expect = np.array(s.ili_proportion)[idx] * np.array(s.flu_positive_proportion)[idx]
    np.testing.assert_allclose(season.values, expect)
    assert season.label == "2015-16"


def test_missing_weeks_rejected():
    s = full_series(start=45, n=40)
    with pytest.raises(SeasonWindowError):
        ili_plus(s)


def test_noncontiguous_weeks_rejected():
    with pytest.raises(ValueError):
        SurveillanceSeries("x", (40, 42), (0.1, 0.1), (0.1, 0.1))


def test_zero_values_clamped_with_warning(caplog):
    s = full_series()
    pos = list(s.flu_positive_proportion)
    pos[s.epi_weeks.index(41)] = 0.0
    s = SurveillanceSeries(s.season_label, s.epi_weeks, s.ili_proportion, tuple(pos))
    with caplog.at_level(logging.WARNING):
        season = ili_plus(s)
    assert season.values[1] == Y_MIN
    assert "clamped" in caplog.text


def test_clamp_counts():
    out, moved = clamp([0.0, 0.5, 1.0])
    assert moved == 2 and out[0] == Y_MIN and out[2] == Y_MAX


def test_peak_history_first_maximum():
    y = np.full(35, 0.01)
    y[[9, 14]] = 0.05
    hist = peak_history([Season("a", tuple(y))])
    assert hist == [(0.05, 10)]


def test_csv_round_trips(tmp_path):
    series = [full_series("a"), full_series("b", rng=np.random.default_rng(1))]
    path = tmp_path / "ili.csv"
    save_surveillance_csv(series, path)
    back = load_surveillance_csv(path)
    assert [b.season_label for b in back] == ["a", "b"]
    assert back[0] == series[0]

    season = ili_plus(series[0])
    season.to_csv(tmp_path / "s.csv")
    assert Season.from_csv(tmp_path / "s.csv", label="a") == season

    (tmp_path / "h.csv").write_text("peak_value,peak_week\n0.02,15\n0.03,19\n")
    assert load_history_csv(tmp_path / "h.csv") == [(0.02, 15.0), (0.03, 19.0)]


def test_season_length_enforced():
    with pytest.raises(ValueError):
        Season("short", (0.1,) * 10)
