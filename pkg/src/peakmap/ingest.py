"""Weekly surveillance series: ILI+ correction, season windowing, peak history."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

Y_MIN = 1e-6
Y_MAX = 1.0 - 1e-6
SEASON_START_WEEK = 40
SEASON_WEEKS = 35
WEEKS_PER_YEAR = 52


class SeasonWindowError(ValueError):
    """The series does not cover the 35-week season window."""


@dataclass(frozen=True)
class SurveillanceSeries:
    """One season of weekly ILI and virologic data.

    ``epi_weeks`` are epidemiological week numbers in calendar order, so a
    season crossing the new year reads 40, 41, ..., 52, 1, 2, ...
    """

    season_label: str
    epi_weeks: tuple[int, ...]
    ili_proportion: tuple[float, ...]
    flu_positive_proportion: tuple[float, ...]

    def __post_init__(self):
        n = len(self.epi_weeks)
        if not (len(self.ili_proportion) == n == len(self.flu_positive_proportion)):
            raise ValueError("epi_weeks, ili and flu_pos must have equal lengths")
        for name in ("ili_proportion", "flu_positive_proportion"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
                raise ValueError(f"{name} values must be proportions in [0, 1]")
        weeks = list(self.epi_weeks)
        for a, b in zip(weeks, weeks[1:]):
            if _next_week(a) != b:
                raise ValueError(f"weeks are not contiguous: {a} then {b}")


def _next_week(w: int) -> int:
    return 1 if w >= WEEKS_PER_YEAR else w + 1


def season_window() -> list[int]:
    """Epidemiological weeks 40, 41, ..., 52, 1, ..., 22 (t = 1..35)."""
    out = [SEASON_START_WEEK]
    while len(out) < SEASON_WEEKS:
        out.append(_next_week(out[-1]))
    return out


@dataclass(frozen=True)
class Season:
    label: str
    y: tuple[float, ...]

    def __post_init__(self):
        if len(self.y) != SEASON_WEEKS:
            raise ValueError(f"a season has exactly {SEASON_WEEKS} weeks, got {len(self.y)}")
        arr = np.asarray(self.y, dtype=float)
        if np.any(arr <= 0) or np.any(arr >= 1):
            raise ValueError("season values must lie in (0, 1)")

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.y, dtype=float)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "y"])
            for t, v in enumerate(self.y, start=1):
                w.writerow([t, repr(float(v))])

    @classmethod
    def from_csv(cls, path: str | Path, label: str | None = None) -> "Season":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        rows.sort(key=lambda r: int(r["t"]))
        return cls(label=label or Path(path).stem, y=tuple(float(r["y"]) for r in rows))


def clamp(y) -> tuple[np.ndarray, int]:
    """Clamp to [Y_MIN, Y_MAX]; also returns how many values moved."""
    arr = np.asarray(y, dtype=float)
    out = np.clip(arr, Y_MIN, Y_MAX)
    return out, int(np.sum(out != arr))


def ili_plus(series: SurveillanceSeries) -> Season:
    """ILI x flu-positive fraction over the week-40-anchored 35-week window."""
    index = {w: k for k, w in enumerate(series.epi_weeks)}
    window = season_window()
    missing = [w for w in window if w not in index]
    if missing:
        raise SeasonWindowError(
            f"season {series.season_label!r} is missing epi weeks {missing}"
        )
    ili = np.asarray(series.ili_proportion, dtype=float)
    pos = np.asarray(series.flu_positive_proportion, dtype=float)
    rows = [index[w] for w in window]
    y, moved = clamp(ili[rows] * pos[rows])
    if moved:
        log.warning(
            "season %r: %d of %d ILI+ values clamped to [%g, %g]",
            series.season_label, moved, SEASON_WEEKS, Y_MIN, Y_MAX,
        )
    return Season(label=series.season_label, y=tuple(y.tolist()))


def peak_history(seasons: list[Season]) -> list[tuple[float, int]]:
    """(peak value, peak week in 1..35) per season; ties go to the earliest week."""
    if not seasons:
        raise ValueError("need at least one season")
    out = []
    for s in seasons:
        v = s.values
        k = int(np.argmax(v))  # first occurrence
        out.append((float(v[k]), k + 1))
    return out


def load_surveillance_csv(path: str | Path) -> list[SurveillanceSeries]:
    """Read a CSV with columns season, epi_week, ili, flu_pos (one row per week)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"season", "epi_week", "ili", "flu_pos"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValueError(f"surveillance CSV needs columns {sorted(need)}")
        groups: dict[str, list] = {}
        for row in reader:
            groups.setdefault(row["season"], []).append(
                (int(row["epi_week"]), float(row["ili"]), float(row["flu_pos"]))
            )
    out = []
    for label, rows in groups.items():
        weeks, ili, pos = zip(*rows)
        out.append(SurveillanceSeries(label, tuple(weeks), tuple(ili), tuple(pos)))
    return out


def save_surveillance_csv(series: list[SurveillanceSeries], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["season", "epi_week", "ili", "flu_pos"])
        for s in series:
            for wk, a, b in zip(s.epi_weeks, s.ili_proportion, s.flu_positive_proportion):
                w.writerow([s.season_label, wk, repr(float(a)), repr(float(b))])


def load_history_csv(path: str | Path) -> list[tuple[float, float]]:
    """Read (peak_value, peak_week) rows from a CSV with those two columns."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"peak_value", "peak_week"} <= set(reader.fieldnames):
            raise ValueError("history CSV needs columns peak_value, peak_week")
        return [(float(r["peak_value"]), float(r["peak_week"])) for r in reader]
