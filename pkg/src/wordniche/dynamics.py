"""Word-fate analysis across window pairs two years apart.

A pair joins the words above the occurrence threshold at t1 with their
state at t2 (four half-year windows later). Words absent or at/below the
threshold at t2 count as fallen. Frequency-change and dissemination-change
statistics are computed over the survivors, restricted where stated to a
frequency range chosen so that threshold artifacts stay below 5%.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .dissemination import HIGH_FREQ_LOG10F, MeasureTable

logger = logging.getLogger(__name__)

DEFAULT_LAG_WINDOWS = 4  # two years of half-year windows


@dataclass
class FateRecord:
    word: str
    d_user_t1: float
    d_thread_t1: float
    log10_f_t1: float
    survived: bool
    dlog10_f: float | None = None
    dd_user: float | None = None
    dd_thread: float | None = None


@dataclass
class WindowPair:
    """Joined word table for two windows with index(t2) = index(t1) + lag."""

    t1_index: int
    t2_index: int
    words: list[str]
    d_user_t1: np.ndarray
    d_thread_t1: np.ndarray
    log10_f_t1: np.ndarray
    survived: np.ndarray  # bool
    dlog10_f: np.ndarray  # NaN where fallen
    dd_user: np.ndarray
    dd_thread: np.ndarray
    d_user_t2: np.ndarray
    d_thread_t2: np.ndarray

    @property
    def n_words(self) -> int:
        return len(self.words)

    def records(self) -> list[FateRecord]:
        out = []
        for k, w in enumerate(self.words):
            s = bool(self.survived[k])
            out.append(
                FateRecord(
                    word=w,
                    d_user_t1=float(self.d_user_t1[k]),
                    d_thread_t1=float(self.d_thread_t1[k]),
                    log10_f_t1=float(self.log10_f_t1[k]),
                    survived=s,
                    dlog10_f=float(self.dlog10_f[k]) if s else None,
                    dd_user=float(self.dd_user[k]) if s else None,
                    dd_thread=float(self.dd_thread[k]) if s else None,
                )
            )
        return out


def join_pair(t1: MeasureTable, t2: MeasureTable) -> WindowPair:
    """Join every word above the threshold at t1 with its t2 state."""
    ids = np.nonzero(t1.threshold_ok)[0]
    words = [t1.words[i] for i in ids]
    n = len(ids)
    survived = np.zeros(n, dtype=bool)
    dlogf = np.full(n, np.nan)
    ddu = np.full(n, np.nan)
    ddt = np.full(n, np.nan)
    du2 = np.full(n, np.nan)
    dt2 = np.full(n, np.nan)
    for k, (i, w) in enumerate(zip(ids, words)):
        j = t2.word_index.get(w)
        if j is None or not t2.threshold_ok[j]:
            continue
        survived[k] = True
        dlogf[k] = math.log10(t2.f[j]) - math.log10(t1.f[i])
        ddu[k] = t2.d_user[j] - t1.d_user[i]
        ddt[k] = t2.d_thread[j] - t1.d_thread[i]
        du2[k] = t2.d_user[j]
        dt2[k] = t2.d_thread[j]
    return WindowPair(
        t1_index=t1.window_index,
        t2_index=t2.window_index,
        words=words,
        d_user_t1=t1.d_user[ids],
        d_thread_t1=t1.d_thread[ids],
        log10_f_t1=np.log10(t1.f[ids]),
        survived=survived,
        dlog10_f=dlogf,
        dd_user=ddu,
        dd_thread=ddt,
        d_user_t2=du2,
        d_thread_t2=dt2,
    )


def pair_windows(
    tables: list[MeasureTable],
    lag: int = DEFAULT_LAG_WINDOWS,
    mode: str = "nonoverlap",
    t1_max_index: int | None = None,
) -> list[WindowPair]:
    """Build window pairs separated by ``lag`` windows.

    Default mode steps t1 by the lag (t1 = 0, lag, 2*lag, ...); all-pairs
    mode uses every t1 with a partner.
    """
    by_index = {t.window_index: t for t in tables}
    max_index = max(by_index) if by_index else -1
    if max_index + 1 < lag + 1:
        raise ValueError(f"need at least {lag + 1} windows, have {max_index + 1}")
    if mode == "nonoverlap":
        t1_indices = range(0, max_index - lag + 1, lag)
    elif mode == "all":
        t1_indices = range(0, max_index - lag + 1)
    else:
        raise ValueError(f"unknown pairing mode: {mode}")
    pairs = []
    for i in t1_indices:
        if t1_max_index is not None and i > t1_max_index:
            break
        if i in by_index and i + lag in by_index:
            pairs.append(join_pair(by_index[i], by_index[i + lag]))
    return pairs


@dataclass
class SurvivalCurve:
    bin_centers: np.ndarray
    fraction: np.ndarray  # fallen fraction per bin
    n: np.ndarray


def survival_curve(
    pair: WindowPair,
    source: str = "d_user",
    bin_width: float = 0.1,
    d_range: tuple[float, float] = (0.0, 1.6),
    min_count: int = 20,
) -> SurvivalCurve:
    """Fraction of t1 words falling to or below the threshold at t2, per
    dissemination bin. Bins with fewer than ``min_count`` words are
    suppressed."""
    d = pair.d_user_t1 if source == "d_user" else pair.d_thread_t1
    fallen = ~pair.survived
    centers, fracs, ns = [], [], []
    edge = d_range[0]
    while edge < d_range[1] - 1e-12:
        in_bin = (d >= edge) & (d < edge + bin_width)
        count = int(np.count_nonzero(in_bin))
        if count >= min_count:
            centers.append(edge + bin_width / 2)
            fracs.append(float(np.count_nonzero(fallen & in_bin)) / count)
            ns.append(count)
        edge += bin_width
    return SurvivalCurve(np.asarray(centers), np.asarray(fracs), np.asarray(ns, np.int64))


@dataclass
class RunningStats:
    x_centers: np.ndarray
    curves: dict[float, np.ndarray]  # percentile -> values
    n: np.ndarray


def running_stats(
    x,
    y,
    width: float,
    step: float,
    min_count: int = 20,
    percentiles: tuple[float, ...] = (10.0, 50.0, 90.0),
) -> RunningStats:
    """Sliding-window percentile curves of y against x."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    keep = np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    if len(x) < min_count:
        raise ValueError("not enough points for running statistics")
    order = np.argsort(x)
    x, y = x[order], y[order]
    centers, ns = [], []
    values: dict[float, list[float]] = {p: [] for p in percentiles}
    c = x[0]
    while c <= x[-1] + 1e-12:
        lo = np.searchsorted(x, c - width / 2, side="left")
        hi = np.searchsorted(x, c + width / 2, side="right")
        if hi - lo >= min_count:
            window = y[lo:hi]
            centers.append(c)
            ns.append(hi - lo)
            for p in percentiles:
                values[p].append(float(np.percentile(window, p)))
        c += step
    return RunningStats(
        np.asarray(centers),
        {p: np.asarray(v) for p, v in values.items()},
        np.asarray(ns, np.int64),
    )


def summary_medians(
    pair: WindowPair,
    source: str = "d_user",
    targets: tuple[float, ...] = (0.4, 1.0),
    halfwidth: float = 0.05,
    min_count: int = 20,
) -> dict[float, tuple[float | None, int]]:
    """Median frequency change of survivors near each target dissemination
    value. Underpopulated bands yield (None, count)."""
    d = pair.d_user_t1 if source == "d_user" else pair.d_thread_t1
    out = {}
    for target in targets:
        band = pair.survived & (np.abs(d - target) <= halfwidth)
        count = int(np.count_nonzero(band))
        if count < min_count:
            logger.warning(
                "summary_medians: pair (%d, %d) has %d survivors near %s=%g, need %d",
                pair.t1_index, pair.t2_index, count, source, target, min_count,
            )
            out[target] = (None, count)
        else:
            out[target] = (float(np.median(pair.dlog10_f[band])), count)
    return out


@dataclass
class FreqRange:
    log10_f_min: float
    log10_f_max: float
    satisfied: bool

    @property
    def f_min(self) -> float:
        return 10.0 ** self.log10_f_min

    @property
    def f_max(self) -> float:
        return 10.0 ** self.log10_f_max


def freq_range(
    pair: WindowPair,
    log10_f_max: float = HIGH_FREQ_LOG10F,
    max_fallen: float = 0.05,
    resolution: float = 0.01,
) -> FreqRange:
    """Frequency range for predictor analyses.

    The upper cutoff is fixed; the lower cutoff is the smallest frequency
    such that fewer than ``max_fallen`` of t1 words inside the range fall
    below the threshold at t2, scanned at the given log10 resolution.
    """
    logf = pair.log10_f_t1
    fallen = ~pair.survived
    upper_ok = logf <= log10_f_max
    if not np.any(upper_ok):
        return FreqRange(log10_f_max, log10_f_max, False)
    lo = math.floor(logf[upper_ok].min() / resolution) * resolution
    candidate = lo
    while candidate <= log10_f_max + 1e-12:
        in_range = upper_ok & (logf >= candidate - 1e-12)
        count = int(np.count_nonzero(in_range))
        if count and np.count_nonzero(fallen & in_range) / count < max_fallen:
            # Report the smallest frequency actually included at this cutoff.
            return FreqRange(float(logf[in_range].min()), log10_f_max, True)
        candidate += resolution
    return FreqRange(log10_f_max, log10_f_max, False)


@dataclass
class DeltaCorrelations:
    direction: str
    r_user: float
    r_thread: float
    n: int


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    if np.std(a) == 0 or np.std(b) == 0:
        raise ValueError("zero variance")
    return float(np.corrcoef(a, b)[0, 1])


def delta_correlations(
    pairs: list[WindowPair],
    direction: str = "forward",
    min_words: int = 30,
    log10_f_max: float = HIGH_FREQ_LOG10F,
) -> DeltaCorrelations:
    """Correlations of frequency change with dissemination change, pooled
    over pairs and restricted per pair to its frequency range.

    Forward: corr(dlog10 f, dD). Reversed: corr(-dlog10 f, D at t2).
    """
    dlogf, a_user, a_thread = [], [], []
    for pair in pairs:
        fr = freq_range(pair, log10_f_max=log10_f_max)
        keep = (
            pair.survived
            & (pair.log10_f_t1 >= fr.log10_f_min - 1e-12)
            & (pair.log10_f_t1 <= fr.log10_f_max + 1e-12)
        )
        dlogf.append(pair.dlog10_f[keep])
        if direction == "forward":
            a_user.append(pair.dd_user[keep])
            a_thread.append(pair.dd_thread[keep])
        elif direction == "reversed":
            a_user.append(pair.d_user_t2[keep])
            a_thread.append(pair.d_thread_t2[keep])
        else:
            raise ValueError(f"unknown direction: {direction}")
    dlogf = np.concatenate(dlogf) if dlogf else np.empty(0)
    if len(dlogf) < min_words:
        raise ValueError(f"only {len(dlogf)} pooled words, need {min_words}")
    a_user = np.concatenate(a_user)
    a_thread = np.concatenate(a_thread)
    response = dlogf if direction == "forward" else -dlogf
    return DeltaCorrelations(
        direction=direction,
        r_user=_pearson(response, a_user),
        r_thread=_pearson(response, a_thread),
        n=len(dlogf),
    )
