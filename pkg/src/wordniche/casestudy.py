"""Rising-word detection, per-word trajectories, and cohort statistics.

A rising word is absent during the group's first quiet years and then in
sustained use (above the occurrence threshold in enough windows, with a
long enough consecutive run). Trajectories track occurrence counts,
frequency, and both dissemination measures per window; the rising period
runs from the first window above threshold to the occurrence peak.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dissemination import MeasureTable

logger = logging.getLogger(__name__)

SECONDS_PER_YEAR = 365.25 * 86_400

# Starter labels for the two cohorts discussed in the analyses: product /
# public-figure words (P) and slang / vernacular words (S). Not exhaustive;
# supply a label file for real studies.
STARTER_LABELS = {
    "gnome": "P",
    "ssh": "P",
    "eminem": "P",
    "bush": "P",
    "saddam": "P",
    "iraq": "P",
    "lol": "S",
    "iirc": "S",
    "prolly": "S",
    "addy": "S",
    "y2k": "S",
    "boxen": "S",
    "rofl": "S",
}


@dataclass
class TrajectoryPoint:
    window_index: int
    window_center: int
    n_w: int
    f: float
    d_user: float | None
    d_thread: float | None
    valid: bool  # above the occurrence threshold


@dataclass
class TrajectorySeries:
    word: str
    points: list[TrajectoryPoint]
    rising_period: tuple[int, int] | None  # (first valid index, peak index)
    label: str = "unlabeled"

    def valid_indices(self) -> list[int]:
        return [p.window_index for p in self.points if p.valid]


def detect_rising(
    tables: list[MeasureTable],
    windows_start: int,
    quiet_years: float = 2.0,
    min_active_windows: int = 4,
    min_consecutive: int = 3,
) -> list[str]:
    """Words unseen while the window center falls in the first quiet years,
    later above the occurrence threshold in enough windows including a
    consecutive run."""
    needed = int(quiet_years * 2) + min_active_windows
    if len(tables) < needed:
        raise ValueError(f"need at least {needed} windows, have {len(tables)}")
    cutoff = windows_start + quiet_years * SECONDS_PER_YEAR
    quiet = [t for t in tables if t.window_center < cutoff]

    vocab: set[str] = set()
    for t in tables:
        vocab.update(t.words)
    present_in_quiet: set[str] = set()
    for t in quiet:
        present_in_quiet.update(t.word_index)  # table words all have n_w >= 1
    silent_early = vocab - present_in_quiet

    out = []
    for word in sorted(silent_early):
        active = [bool(t.threshold_ok[t.word_index[word]]) if word in t.word_index else False for t in tables]
        if sum(active) < min_active_windows:
            continue
        run = best = 0
        for flag in active:
            run = run + 1 if flag else 0
            best = max(best, run)
        if best >= min_consecutive:
            out.append(word)
    return out


def trajectory(word: str, tables: list[MeasureTable], label: str = "unlabeled") -> TrajectorySeries:
    """Full per-window series for one word; errors if never observed."""
    points = []
    ever_seen = False
    for t in tables:
        i = t.word_index.get(word)
        if i is None or t.n_w[i] == 0:
            points.append(TrajectoryPoint(t.window_index, t.window_center, 0, 0.0, None, None, False))
            continue
        ever_seen = True
        ok = bool(t.threshold_ok[i])
        points.append(
            TrajectoryPoint(
                window_index=t.window_index,
                window_center=t.window_center,
                n_w=int(t.n_w[i]),
                f=float(t.f[i]),
                d_user=float(t.d_user[i]) if ok else None,
                d_thread=float(t.d_thread[i]) if ok else None,
                valid=ok,
            )
        )
    if not ever_seen:
        raise ValueError(f"word never observed: {word}")

    valid_idx = [p.window_index for p in points if p.valid]
    rising = None
    if valid_idx:
        counts = [p.n_w for p in points]
        peak = points[int(np.argmax(counts))].window_index
        rising = (valid_idx[0], peak)
    return TrajectorySeries(word=word, points=points, rising_period=rising, label=label)


@dataclass
class CohortBox:
    metric: str  # mean_f | mean_d_user | mean_d_thread
    n_words: int
    median: float
    q25: float
    q75: float


@dataclass
class CohortStats:
    scope: str
    boxes: list[CohortBox]
    per_word_means: dict[str, dict[str, float]]
    normalized_series: dict[str, list[tuple[int, float]]]  # word -> (window, n_w/max)
    excluded: list[str]


def cohort_stats(
    series: list[TrajectorySeries],
    scope: str = "all_windows",
) -> CohortStats:
    """Box statistics of per-word mean frequency and dissemination.

    Means are taken over each word's valid windows, restricted to its
    rising period when requested; words with no valid window in scope are
    excluded with a diagnostic.
    """
    if len(series) < 2:
        raise ValueError("need at least two trajectories")
    if scope not in ("all_windows", "rising_period"):
        raise ValueError(f"unknown scope: {scope}")

    per_word: dict[str, dict[str, float]] = {}
    normalized: dict[str, list[tuple[int, float]]] = {}
    excluded: list[str] = []
    for s in series:
        pts = [p for p in s.points if p.valid]
        if scope == "rising_period":
            if s.rising_period is None:
                pts = []
            else:
                lo, hi = s.rising_period
                pts = [p for p in pts if lo <= p.window_index <= hi]
        if not pts:
            excluded.append(s.word)
            logger.warning("cohort_stats: %s has no valid window in scope %s", s.word, scope)
            continue
        per_word[s.word] = {
            "mean_f": float(np.mean([p.f for p in pts])),
            "mean_d_user": float(np.mean([p.d_user for p in pts])),
            "mean_d_thread": float(np.mean([p.d_thread for p in pts])),
        }
        peak = max(p.n_w for p in s.points)
        normalized[s.word] = [(p.window_index, p.n_w / peak) for p in s.points]

    boxes = []
    for metric in ("mean_f", "mean_d_user", "mean_d_thread"):
        values = np.asarray([v[metric] for v in per_word.values()])
        if len(values) == 0:
            boxes.append(CohortBox(metric, 0, math.nan, math.nan, math.nan))
            continue
        q = np.percentile(values, [25, 50, 75])
        boxes.append(CohortBox(metric, len(values), float(q[1]), float(q[0]), float(q[2])))
    return CohortStats(scope, boxes, per_word, normalized, excluded)


def load_labels(path: str | Path) -> dict[str, str]:
    """Read a (word, label) CSV; lines starting with '#' are comments."""
    labels: dict[str, str] = {}
    with open(path, "r", encoding="utf-8", newline="") as handle:
        rows = csv.reader(ln for ln in handle if not ln.startswith("#"))
        for row in rows:
            if len(row) < 2 or row[0].lower() == "word":
                continue
            labels[row[0].strip()] = row[1].strip()
    return labels
