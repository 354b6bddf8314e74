"""Window standardization so users and threads are comparable proxies.

Four seeded steps: equalize post length, keep one post per (user, thread),
cap posts per user and per thread, then remove entities uniformly at
random from the larger side until the user and thread counts match. The
correlations and summary statistics over the trimmed windows use the exact
baseline throughout.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from .corpus import TokenizedPost, WindowSlice
from .counting import build_counts
from .dissemination import measure_table
from .null_models import dhat_table

logger = logging.getLogger(__name__)

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class TrimParams:
    post_length: int
    max_posts_per_entity: int = 10
    seed: int = 0
    max_balance_iterations: int = 10_000

    def __post_init__(self):
        if self.post_length < 1:
            raise ValueError("post_length must be >= 1")
        if self.max_posts_per_entity < 1:
            raise ValueError("max_posts_per_entity must be >= 1")


@dataclass
class TrimReport:
    posts_kept: int
    posts_removed: int
    n_users: int
    n_threads: int
    ks_distance: float
    iterations: int
    balanced: bool


def _entity_counts(posts: list[TokenizedPost]):
    users: dict[str, int] = {}
    threads: dict[str, int] = {}
    for p in posts:
        users[p.user_id] = users.get(p.user_id, 0) + 1
        threads[p.thread_id] = threads.get(p.thread_id, 0) + 1
    return users, threads


def _cap_entities(
    posts: list[TokenizedPost], cap: int, key: str, rng: np.random.Generator
) -> list[TokenizedPost]:
    by_entity: dict[str, list[int]] = {}
    for idx, p in enumerate(posts):
        by_entity.setdefault(getattr(p, key), []).append(idx)
    drop: set[int] = set()
    for entity in sorted(by_entity):
        members = by_entity[entity]
        excess = len(members) - cap
        if excess > 0:
            chosen = rng.choice(len(members), size=excess, replace=False)
            drop.update(members[int(c)] for c in chosen)
    return [p for idx, p in enumerate(posts) if idx not in drop]


def trim_window(slice_: WindowSlice, params: TrimParams) -> tuple[WindowSlice, TrimReport]:
    """Standardize one window; returns the trimmed slice and a report.

    All randomness comes from ``params.seed``, so identical inputs yield
    identical output.
    """
    if not slice_.posts:
        raise ValueError("empty slice")
    rng = np.random.default_rng([params.seed & _SEED_MASK, slice_.window.index])
    n_input = len(slice_.posts)
    length = params.post_length

    # 1. Uniform post size: drop short posts, truncate long ones.
    posts = [
        TokenizedPost(p.post, p.tokens[:length])
        for p in slice_.posts
        if len(p.tokens) >= length
    ]

    # 2. One post per (user, thread): the earliest wins (posts arrive sorted).
    seen: set[tuple[str, str]] = set()
    unique_posts = []
    for p in sorted(posts, key=lambda q: q.timestamp):
        key = (p.user_id, p.thread_id)
        if key not in seen:
            seen.add(key)
            unique_posts.append(p)
    posts = unique_posts

    # 3. Cap posts per user, then per thread (removal only, so both caps hold).
    posts = _cap_entities(posts, params.max_posts_per_entity, "user_id", rng)
    posts = _cap_entities(posts, params.max_posts_per_entity, "thread_id", rng)

    # 4. Balance entity counts by random whole-entity removal with recount.
    iterations = 0
    users, threads = _entity_counts(posts)
    while len(users) != len(threads) and iterations < params.max_balance_iterations:
        iterations += 1
        if len(users) > len(threads):
            victim = sorted(users)[int(rng.integers(len(users)))]
            posts = [p for p in posts if p.user_id != victim]
        else:
            victim = sorted(threads)[int(rng.integers(len(threads)))]
            posts = [p for p in posts if p.thread_id != victim]
        users, threads = _entity_counts(posts)

    balanced = len(users) == len(threads)
    if not balanced:
        logger.warning(
            "trim_window: balance loop hit iteration cap with %d users vs %d threads",
            len(users), len(threads),
        )
    if users and threads:
        # only the distance matters here; asymp skips the exact p-value
        # machinery, and errstate hides its division on size-1 samples
        with np.errstate(divide="ignore"):
            result = ks_2samp(list(users.values()), list(threads.values()), method="asymp")
        ks = float(result.statistic)
    else:
        ks = float("nan")

    posts.sort(key=lambda p: p.timestamp)
    report = TrimReport(
        posts_kept=len(posts),
        posts_removed=n_input - len(posts),
        n_users=len(users),
        n_threads=len(threads),
        ks_distance=ks,
        iterations=iterations,
        balanced=balanced,
    )
    return WindowSlice(slice_.window, posts), report


CORRELATION_PAIRS = (
    ("dhat_user", "d_user"),
    ("dhat_thread", "d_thread"),
    ("d_user", "d_thread"),
    ("dhat_user", "dhat_thread"),
)


def _pearson_or_nan(a: np.ndarray, b: np.ndarray) -> float:
    if np.std(a) == 0 or np.std(b) == 0:
        return float("nan")
    return float(np.corrcoef(a, b)[0, 1])


@dataclass
class WindowCorrelations:
    window_index: int
    n_words: int
    r: dict[tuple[str, str], float]


@dataclass
class CorrelationSummary:
    per_window: list[WindowCorrelations]
    mean: dict[tuple[str, str], float]
    std: dict[tuple[str, str], float]
    skipped: list[int]


def _measure_columns(slice_: WindowSlice) -> dict[str, np.ndarray] | None:
    counts = build_counts(slice_)
    if counts.n_tokens == 0:
        return None
    table = measure_table(counts, baseline="exact")
    ids = np.nonzero(table.threshold_ok)[0]
    if len(ids) == 0:
        return None
    cond = dhat_table(counts, ids)
    return {
        "window_index": counts.window.index if counts.window else 0,
        "d_user": table.d_user[ids],
        "d_thread": table.d_thread[ids],
        "dhat_user": cond["dhat_user"],
        "dhat_thread": cond["dhat_thread"],
    }


def trimmed_correlations(
    slices: list[WindowSlice], min_words: int = 30
) -> CorrelationSummary:
    """Pearson correlations between the four measures, per window, over
    words above the occurrence threshold; windows with too few such words
    are skipped with a diagnostic."""
    per_window: list[WindowCorrelations] = []
    skipped: list[int] = []
    for slice_ in slices:
        cols = _measure_columns(slice_)
        if cols is None or len(cols["d_user"]) < min_words:
            skipped.append(slice_.window.index)
            logger.warning(
                "trimmed_correlations: window %d has too few valid words, skipped",
                slice_.window.index,
            )
            continue
        r = {}
        for a, b in CORRELATION_PAIRS:
            r[(a, b)] = _pearson_or_nan(cols[a], cols[b])
        per_window.append(WindowCorrelations(cols["window_index"], len(cols["d_user"]), r))
    mean, std = {}, {}
    for pair in CORRELATION_PAIRS:
        vals = np.asarray([w.r[pair] for w in per_window])
        mean[pair] = float(vals.mean()) if len(vals) else float("nan")
        std[pair] = float(vals.std()) if len(vals) else float("nan")
    return CorrelationSummary(per_window, mean, std, skipped)


MEASURE_NAMES = ("d_user", "d_thread", "dhat_user", "dhat_thread")
DIFF_NAMES = ("dhat_user-d_user", "dhat_thread-d_thread")
LOW_D_CUTOFF = 0.4


@dataclass
class MeasureSummary:
    name: str
    n: int
    median: float
    q25: float
    q75: float
    o12_5: float
    o87_5: float
    below_cutoff: int | None


def dissemination_summary(slices: list[WindowSlice]) -> list[MeasureSummary]:
    """Pooled median/quartile/octile summaries of the four measures and of
    the per-word conditional-minus-global differences, with occurrences in
    different windows counted independently."""
    pooled: dict[str, list[np.ndarray]] = {k: [] for k in MEASURE_NAMES + DIFF_NAMES}
    for slice_ in slices:
        cols = _measure_columns(slice_)
        if cols is None:
            continue
        for name in MEASURE_NAMES:
            pooled[name].append(cols[name])
        pooled["dhat_user-d_user"].append(cols["dhat_user"] - cols["d_user"])
        pooled["dhat_thread-d_thread"].append(cols["dhat_thread"] - cols["d_thread"])

    out = []
    for name in MEASURE_NAMES + DIFF_NAMES:
        values = np.concatenate(pooled[name]) if pooled[name] else np.empty(0)
        if len(values) == 0:
            out.append(MeasureSummary(name, 0, *([float("nan")] * 5), 0))
            continue
        q = np.percentile(values, [12.5, 25, 50, 75, 87.5])
        out.append(
            MeasureSummary(
                name=name,
                n=len(values),
                median=float(q[2]),
                q25=float(q[1]),
                q75=float(q[3]),
                o12_5=float(q[0]),
                o87_5=float(q[4]),
                # the low-measure count is meaningful for measures only,
                # not for the conditional-minus-global differences
                below_cutoff=(
                    int(np.count_nonzero(values < LOW_D_CUTOFF))
                    if name in MEASURE_NAMES
                    else None
                ),
            )
        )
    return out
