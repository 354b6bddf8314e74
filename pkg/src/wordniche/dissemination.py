"""Dissemination measures: observed vs expected reach across users and threads.

The baseline model reassigns all tokens to slots uniformly at random,
holding per-entity token totals fixed. For a word with ``n`` occurrences in
a window of ``total`` tokens, the chance that an entity holding ``m`` token
slots receives none of them is

    prod_{j=0}^{n-1} (1 - m / (total - j))

and the expected number of distinct entities reached is the sum over
entities of the complements. When m/total and f = n/total are both small
this is well approximated by the Poisson form 1 - exp(-f*m).

The dissemination measure is the ratio of the observed distinct-entity
count to this expectation: 1 for randomly scattered words, below 1 for
clumped words, above 1 for over-disseminated words.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import gammaln

from .counting import WindowCounts

logger = logging.getLogger(__name__)

# Words must occur strictly more often than this to get a measure.
OCCURRENCE_THRESHOLD = 5

# Words above this log10 frequency are flagged not-informative: their
# occurrence counts are too large relative to the entity counts.
HIGH_FREQ_LOG10F = -2.52

# Above this many draws the absence product is evaluated in log space.
LOG_SPACE_MIN_DRAWS = 1000


def _as_sizes(sizes) -> np.ndarray:
    if isinstance(sizes, Mapping):
        values = list(sizes.values())
    else:
        values = list(sizes)
    return np.asarray(values, dtype=np.float64)


def log_prob_absent(sizes: np.ndarray, draws, total) -> np.ndarray:
    """log P(entity receives none of the draws), via falling-factorial ratios.

    Identical to the direct product for integer sizes; safe against
    underflow for large draw counts. Entries where size + draws > total are
    -inf (the entity is certain to be hit).
    """
    sizes = np.asarray(sizes, dtype=np.float64)
    draws = np.asarray(draws, dtype=np.float64)
    total = np.asarray(total, dtype=np.float64)
    out = np.full(np.broadcast(sizes, draws, total).shape, -np.inf)
    ok = sizes + draws <= total
    s, d, t = np.broadcast_arrays(sizes, draws, total)
    out[ok] = (
        gammaln(t[ok] - s[ok] + 1)
        - gammaln(t[ok] - s[ok] - d[ok] + 1)
        - gammaln(t[ok] + 1)
        + gammaln(t[ok] - d[ok] + 1)
    )
    return out


def expected_entities_exact(draws: int, sizes, total: int | None = None) -> float:
    """Expected distinct entities hit by ``draws`` uniform slot placements.

    ``sizes`` maps entities to their token-slot counts (mapping or
    sequence); their sum must equal the window total. Entities whose size
    plus the draw count exceeds the total are certain to be hit; their
    probability clamps to 1 and a diagnostic is logged.
    """
    arr = _as_sizes(sizes)
    sum_sizes = int(round(arr.sum()))
    if total is None:
        total = sum_sizes
    elif sum_sizes != total:
        raise ValueError(f"sizes sum to {sum_sizes}, expected total {total}")
    if draws < 0 or draws > total:
        raise ValueError(f"draws {draws} outside [0, {total}]")
    if draws == 0:
        return 0.0

    clamped = arr + draws > total
    n_clamped = int(np.count_nonzero(clamped))
    if n_clamped:
        logger.warning(
            "expected_entities_exact: %d entities saturated (size + draws > total)",
            n_clamped,
        )
    free = arr[~clamped]
    if draws <= LOG_SPACE_MIN_DRAWS:
        prob_absent = np.ones_like(free)
        for j in range(draws):
            prob_absent *= 1.0 - free / (total - j)
        np.clip(prob_absent, 0.0, 1.0, out=prob_absent)
    else:
        prob_absent = np.exp(log_prob_absent(free, draws, total))
    return float(np.sum(1.0 - prob_absent)) + n_clamped


def expected_entities_poisson(f_w: float, sizes) -> float:
    """Poisson-limit expectation: sum over entities of 1 - exp(-f*m)."""
    arr = _as_sizes(sizes)
    return float(np.sum(-np.expm1(-f_w * arr)))


def expected_for_counts(
    counts: WindowCounts,
    mode: str = "users",
    baseline: str = "poisson",
    word_ids: np.ndarray | None = None,
) -> np.ndarray:
    """Expected distinct-entity counts for many words of one window at once.

    Groups words by occurrence count and entities by size, so the cost is
    (distinct occurrence counts) x (distinct sizes) rather than
    words x entities. The exact baseline is evaluated in log space here;
    it agrees with the per-word product to floating-point accuracy.
    """
    if mode == "users":
        sizes = counts.user_tokens
    elif mode == "threads":
        sizes = counts.thread_tokens
    else:
        raise ValueError(f"unknown mode: {mode}")
    if baseline not in ("poisson", "exact"):
        raise ValueError(f"unknown baseline: {baseline}")

    nw = counts.word_counts if word_ids is None else counts.word_counts[word_ids]
    total = counts.n_tokens
    if total == 0:
        return np.zeros(len(nw))

    size_vals, size_mult = np.unique(sizes, return_counts=True)
    draw_vals, draw_inv = np.unique(nw, return_inverse=True)
    expected_by_draw = np.empty(len(draw_vals))
    for k, d in enumerate(draw_vals):
        if d == 0:
            expected_by_draw[k] = 0.0
            continue
        if baseline == "poisson":
            hit = -np.expm1(-(d / total) * size_vals)
        else:
            hit = -np.expm1(log_prob_absent(size_vals, float(d), float(total)))
        expected_by_draw[k] = float(np.dot(size_mult, hit))
    return expected_by_draw[draw_inv]


@dataclass
class WordMeasures:
    """Per-word, per-window dissemination record. Fields for the mode that
    was not requested are left as None."""

    word: str
    n_w: int
    f: float
    u_w: int | None = None
    t_w: int | None = None
    u_expected: float | None = None
    t_expected: float | None = None
    d_user: float | None = None
    d_thread: float | None = None
    d_user_max: float | None = None
    d_thread_max: float | None = None
    valid: bool = False


def dissemination_measure(
    counts: WindowCounts,
    word: str,
    mode: str = "users",
    baseline: str = "poisson",
    threshold: int = OCCURRENCE_THRESHOLD,
    high_freq_log10f: float = HIGH_FREQ_LOG10F,
) -> WordMeasures:
    """Observed over expected distinct-entity count for one word.

    Words at or below the occurrence threshold get a record marked invalid
    with no measure (they are kept for trajectories, excluded from
    analyses).
    """
    if counts.n_tokens == 0:
        raise ValueError("empty window")
    n_w = counts.occurrences(word)
    f = n_w / counts.n_tokens
    valid = n_w > threshold and math.log10(f) <= high_freq_log10f
    out = WordMeasures(word=word, n_w=n_w, f=f, valid=valid)
    if n_w <= threshold:
        return out

    if mode == "users":
        sizes = counts.user_tokens
        observed = counts.distinct_users(word)
        n_entities = counts.n_users
    elif mode == "threads":
        sizes = counts.thread_tokens
        observed = counts.distinct_threads(word)
        n_entities = counts.n_threads
    else:
        raise ValueError(f"unknown mode: {mode}")

    if baseline == "exact":
        expected = expected_entities_exact(n_w, sizes, counts.n_tokens)
    elif baseline == "poisson":
        expected = expected_entities_poisson(f, sizes)
    else:
        raise ValueError(f"unknown baseline: {baseline}")

    d = observed / expected
    d_max = min(n_w, n_entities) / expected
    if mode == "users":
        out.u_w, out.u_expected, out.d_user, out.d_user_max = observed, expected, d, d_max
    else:
        out.t_w, out.t_expected, out.d_thread, out.d_thread_max = observed, expected, d, d_max
    return out


def residual_idf(counts: WindowCounts, word: str) -> float:
    """Log gap between equal-length-document expected and observed thread counts.

    Uses the Poisson baseline with all thread lengths set equal; when the
    actual thread lengths are equal this is exactly -log of the
    thread-dissemination measure under the Poisson baseline.
    """
    n_w = counts.occurrences(word)
    if n_w <= OCCURRENCE_THRESHOLD:
        raise ValueError(f"word occurs {n_w} times, need more than {OCCURRENCE_THRESHOLD}")
    t_w = counts.distinct_threads(word)
    if t_w == 0:
        raise ValueError("word observed in no thread")
    n_threads = counts.n_threads
    t_equal = n_threads * -math.expm1(-n_w / n_threads)
    return math.log(t_equal) - math.log(t_w)


@dataclass
class MeasureTable:
    """Vectorized per-window measures for every word, aligned with
    ``counts.words`` order."""

    window_index: int
    window_center: int
    n_tokens: int
    n_users: int
    n_threads: int
    baseline: str
    words: list[str]
    n_w: np.ndarray
    f: np.ndarray
    u_w: np.ndarray
    t_w: np.ndarray
    u_expected: np.ndarray  # NaN below threshold
    t_expected: np.ndarray
    d_user: np.ndarray
    d_thread: np.ndarray
    d_user_max: np.ndarray
    d_thread_max: np.ndarray
    threshold_ok: np.ndarray  # n_w > threshold
    valid: np.ndarray  # threshold_ok and below the high-frequency cutoff
    word_index: dict[str, int]

    @property
    def n_words(self) -> int:
        return len(self.words)


def measure_table(
    counts: WindowCounts,
    baseline: str = "poisson",
    threshold: int = OCCURRENCE_THRESHOLD,
    high_freq_log10f: float = HIGH_FREQ_LOG10F,
) -> MeasureTable:
    """Compute user and thread dissemination for every word in a window."""
    n_words = counts.n_words
    nw = counts.word_counts.astype(np.int64)
    f = nw / counts.n_tokens if counts.n_tokens else np.zeros(n_words)
    threshold_ok = nw > threshold
    with np.errstate(divide="ignore"):
        log10f = np.where(nw > 0, np.log10(np.maximum(f, 1e-300)), -np.inf)
    valid = threshold_ok & (log10f <= high_freq_log10f)

    u_expected = np.full(n_words, np.nan)
    t_expected = np.full(n_words, np.nan)
    d_user = np.full(n_words, np.nan)
    d_thread = np.full(n_words, np.nan)
    d_user_max = np.full(n_words, np.nan)
    d_thread_max = np.full(n_words, np.nan)

    ids = np.nonzero(threshold_ok)[0]
    if len(ids):
        ue = expected_for_counts(counts, "users", baseline, ids)
        te = expected_for_counts(counts, "threads", baseline, ids)
        u_expected[ids] = ue
        t_expected[ids] = te
        d_user[ids] = counts.word_users[ids] / ue
        d_thread[ids] = counts.word_threads[ids] / te
        d_user_max[ids] = np.minimum(nw[ids], counts.n_users) / ue
        d_thread_max[ids] = np.minimum(nw[ids], counts.n_threads) / te

    window = counts.window
    return MeasureTable(
        window_index=window.index if window else 0,
        window_center=window.center if window else 0,
        n_tokens=counts.n_tokens,
        n_users=counts.n_users,
        n_threads=counts.n_threads,
        baseline=baseline,
        words=counts.words,
        n_w=nw,
        f=f,
        u_w=counts.word_users.astype(np.int64),
        t_w=counts.word_threads.astype(np.int64),
        u_expected=u_expected,
        t_expected=t_expected,
        d_user=d_user,
        d_thread=d_thread,
        d_user_max=d_user_max,
        d_thread_max=d_thread_max,
        threshold_ok=threshold_ok,
        valid=valid,
        word_index={w: i for i, w in enumerate(counts.words)},
    )
