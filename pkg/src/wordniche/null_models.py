"""Monte Carlo shuffling baselines and conditional dissemination measures.

Three shuffle schemes over token slots: global (across the whole window),
within threads, and within a user's posts. Every scheme preserves all
per-user and per-thread token totals and all word occurrence counts by
construction, because only word ids move between slots.

The conditional measures replace the global baseline with the expectation
under the within-thread shuffle (for users) or the within-user shuffle
(for threads); closed forms exist because under either scheme a word's
occurrences inside one constraint group land on a uniformly random subset
of that group's slots, independently across groups.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .counting import WindowCounts
from .dissemination import expected_for_counts, log_prob_absent

logger = logging.getLogger(__name__)

SCHEME_KINDS = ("global", "within_thread", "within_user")

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class ShuffleScheme:
    kind: str = "global"
    seed: int = 0
    replicates: int = 100

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown shuffle kind: {self.kind}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")

    def rng(self, replicate: int) -> np.random.Generator:
        """Deterministic generator for one replicate: h(seed, replicate)."""
        return np.random.default_rng([self.seed & _SEED_MASK, replicate])


def _group_layout(counts: WindowCounts, kind: str):
    """Slot order grouping by thread or user, cached on the counts object."""
    key = ("layout", kind)
    if key in counts._cache:
        return counts._cache[key]
    slots = counts.slots
    if slots is None:
        raise ValueError("counts were built without token slots")
    group = slots.thread if kind == "within_thread" else slots.user
    order = np.argsort(group, kind="stable")
    layout = (order, group[order])
    counts._cache[key] = layout
    return layout


def shuffle(
    counts: WindowCounts,
    scheme: ShuffleScheme,
    replicate: int,
    validate: bool = False,
) -> np.ndarray:
    """Return the word id per slot after one replicate's shuffle.

    Slot users and threads never move, so all token totals are conserved;
    the permutation is uniform over those allowed by the scheme.
    """
    slots = counts.slots
    if slots is None:
        raise ValueError("counts were built without token slots")
    rng = scheme.rng(replicate)
    n = counts.n_tokens
    if scheme.kind == "global":
        shuffled = slots.word[rng.permutation(n)]
    else:
        order, group_sorted = _group_layout(counts, scheme.kind)
        keys = rng.random(n)
        within = np.lexsort((keys, group_sorted))
        shuffled = np.empty(n, dtype=slots.word.dtype)
        shuffled[order] = slots.word[order][within]
    if validate:
        assert np.array_equal(
            np.bincount(shuffled, minlength=counts.n_words), counts.word_counts
        )
    return shuffled


def _distinct_per_word(
    word_of_slot: np.ndarray, entity_of_slot: np.ndarray, n_words: int, n_entities: int
) -> np.ndarray:
    key = word_of_slot.astype(np.int64) * n_entities + entity_of_slot
    pairs = np.unique(key)
    return np.bincount(pairs // n_entities, minlength=n_words)


@dataclass
class PercentileBand:
    """Per-frequency-bin percentiles of the null dissemination measure."""

    bin_centers: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    n: np.ndarray
    percentiles: tuple[float, float] = (10.0, 90.0)


def _nearest_rank(sorted_values: np.ndarray, pct: float) -> float:
    n = len(sorted_values)
    rank = max(1, math.ceil(pct / 100.0 * n))
    return float(sorted_values[rank - 1])


def null_d_samples(
    counts: WindowCounts,
    mode: str = "users",
    scheme: ShuffleScheme | None = None,
    baseline: str = "exact",
    min_occurrences: int = 5,
):
    """Null dissemination values per (replicate, word) under a scheme.

    Returns (word_ids, matrix) where matrix[r, k] is the measure of word
    ``word_ids[k]`` recomputed from replicate r's shuffled assignment.
    """
    if counts.n_tokens == 0:
        raise ValueError("empty window")
    if scheme is None:
        scheme = ShuffleScheme("global")
    entity = counts.slots.user if mode == "users" else counts.slots.thread
    n_entities = counts.n_users if mode == "users" else counts.n_threads
    word_ids = np.nonzero(counts.word_counts > min_occurrences)[0]
    expected = expected_for_counts(counts, mode, baseline, word_ids)
    samples = np.empty((scheme.replicates, len(word_ids)))
    for r in range(scheme.replicates):
        shuffled = shuffle(counts, scheme, r)
        distinct = _distinct_per_word(shuffled, entity, counts.n_words, n_entities)
        samples[r] = distinct[word_ids] / expected
    return word_ids, samples


def null_mean_d(
    counts: WindowCounts,
    mode: str = "users",
    scheme: ShuffleScheme | None = None,
    baseline: str = "exact",
) -> tuple[np.ndarray, np.ndarray]:
    """Mean null measure per word; 1 in expectation under the exact baseline."""
    word_ids, samples = null_d_samples(counts, mode, scheme, baseline)
    return word_ids, samples.mean(axis=0)


def mc_band(
    counts: WindowCounts,
    mode: str = "users",
    scheme: ShuffleScheme | None = None,
    replicates: int | None = None,
    percentiles: tuple[float, float] = (10.0, 90.0),
    bin_width: float = 0.25,
    min_samples: int = 20,
    baseline: str = "poisson",
) -> PercentileBand:
    """Percentile band of the null measure, pooled per log10-frequency bin.

    Bins with fewer than ``min_samples`` word-replicate samples are
    suppressed.
    """
    if counts.n_tokens == 0:
        raise ValueError("empty window")
    if scheme is None:
        scheme = ShuffleScheme("global", replicates=replicates or 100)
    elif replicates is not None and replicates != scheme.replicates:
        scheme = ShuffleScheme(scheme.kind, scheme.seed, replicates)

    word_ids, samples = null_d_samples(counts, mode, scheme, baseline)
    if len(word_ids) == 0:
        empty = np.empty(0)
        return PercentileBand(empty, empty, empty, np.empty(0, np.int64), percentiles)

    logf = np.log10(counts.word_counts[word_ids] / counts.n_tokens)
    first = math.floor(logf.min() / bin_width)
    bin_of_word = np.floor(logf / bin_width).astype(np.int64) - first
    n_bins = int(bin_of_word.max()) + 1

    centers, los, his, ns = [], [], [], []
    for b in range(n_bins):
        cols = bin_of_word == b
        pool = samples[:, cols].ravel()
        if len(pool) < min_samples:
            continue
        pool.sort()
        centers.append((first + b + 0.5) * bin_width)
        los.append(_nearest_rank(pool, percentiles[0]))
        his.append(_nearest_rank(pool, percentiles[1]))
        ns.append(len(pool))
    return PercentileBand(
        np.asarray(centers), np.asarray(los), np.asarray(his),
        np.asarray(ns, dtype=np.int64), percentiles,
    )


# ---------------------------------------------------------------------------
# Conditional baselines


@dataclass
class ConditionalExpectation:
    value: float
    method: str
    warnings: tuple[str, ...] = ()
    stderr: float | None = None  # only for the mc method


@dataclass
class ConditionalMeasures:
    word: str
    u_w: int
    t_w: int
    u_expected_cond: float
    t_expected_cond: float
    dhat_user: float
    dhat_thread: float
    warnings: tuple[str, ...] = ()


def _prob_absent_product(sizes: np.ndarray, draws: int, total: int) -> np.ndarray:
    """Direct product form of the absence probability; clamps saturated
    entries to zero."""
    prob = np.ones(len(sizes))
    for j in range(draws):
        prob *= 1.0 - sizes / (total - j)
    return np.clip(prob, 0.0, 1.0)


def _ut_by_thread(counts: WindowCounts):
    """(user, thread) incidence re-sorted by thread, with offsets per thread."""
    key = ("ut_by_thread",)
    if key not in counts._cache:
        order = np.argsort(counts.ut_thread, kind="stable")
        threads = counts.ut_thread[order]
        offsets = np.searchsorted(threads, np.arange(counts.n_threads + 1))
        counts._cache[key] = (counts.ut_user[order], counts.ut_count[order], offsets)
    return counts._cache[key]


def _ut_by_user(counts: WindowCounts):
    key = ("ut_by_user",)
    if key not in counts._cache:
        offsets = np.searchsorted(counts.ut_user, np.arange(counts.n_users + 1))
        counts._cache[key] = (counts.ut_thread, counts.ut_count, offsets)
    return counts._cache[key]


def _word_incidence(counts: WindowCounts, word: str, mode: str):
    wid = counts.word_id(word)
    if wid is None:
        raise ValueError(f"word not in window: {word}")
    if mode == "users_within_threads":
        lo, hi = np.searchsorted(counts.wt_word, [wid, wid + 1])
        return wid, counts.wt_thread[lo:hi], counts.wt_count[lo:hi]
    if mode == "threads_within_users":
        lo, hi = np.searchsorted(counts.wu_word, [wid, wid + 1])
        return wid, counts.wu_user[lo:hi], counts.wu_count[lo:hi]
    raise ValueError(f"unknown mode: {mode}")


def _conditional_analytic(counts: WindowCounts, word: str, mode: str) -> float:
    """Closed-form conditional expectation for one word.

    users_within_threads: per thread holding the word, each user's slots in
    that thread may catch one of the word's occurrences there; absence
    probabilities multiply across threads because the shuffles are
    independent per group.
    """
    if mode == "users_within_threads":
        _, groups, draws_per_group = _word_incidence(counts, word, mode)
        members, member_sizes, offsets = _ut_by_thread(counts)
        group_totals = counts.thread_tokens
        n_targets = counts.n_users
    else:
        _, groups, draws_per_group = _word_incidence(counts, word, mode)
        members, member_sizes, offsets = _ut_by_user(counts)
        group_totals = counts.user_tokens
        n_targets = counts.n_threads

    log_absent = np.zeros(n_targets)
    touched = np.zeros(n_targets, dtype=bool)
    for g, d in zip(groups, draws_per_group):
        lo, hi = offsets[g], offsets[g + 1]
        tgt = members[lo:hi]
        prob = _prob_absent_product(
            member_sizes[lo:hi].astype(np.float64), int(d), int(group_totals[g])
        )
        with np.errstate(divide="ignore"):
            log_absent[tgt] += np.log(prob)
        touched[tgt] = True
    return float(np.sum(1.0 - np.exp(log_absent[touched])))


def _conditional_mc(
    counts: WindowCounts, word: str, mode: str, scheme: ShuffleScheme
) -> float:
    """Mean distinct entities over replicates of the matching shuffle.

    Samples each group's occurrence slots directly as a uniform subset,
    which is the induced distribution of the within-group shuffle.
    """
    if mode == "users_within_threads":
        group_of_slot = counts.slots.thread
        target_of_slot = counts.slots.user
    else:
        group_of_slot = counts.slots.user
        target_of_slot = counts.slots.thread
    _, groups, draws_per_group = _word_incidence(counts, word, mode)

    rng = scheme.rng(0)
    reps = scheme.replicates
    chunks = []
    for g, d in zip(groups, draws_per_group):
        slot_idx = np.nonzero(group_of_slot == g)[0]
        picks = np.argsort(rng.random((reps, len(slot_idx))), axis=1)[:, : int(d)]
        chunks.append(target_of_slot[slot_idx[picks]])
    hits = np.concatenate(chunks, axis=1)
    hits.sort(axis=1)
    distinct = 1 + np.count_nonzero(np.diff(hits, axis=1), axis=1)
    return float(distinct.mean()), float(distinct.std(ddof=1) / math.sqrt(reps))


def conditional_expected(
    counts: WindowCounts,
    word: str,
    mode: str = "users_within_threads",
    method: str = "analytic",
    scheme: ShuffleScheme | None = None,
    replicates: int = 1000,
) -> ConditionalExpectation:
    """Expected distinct users (or threads) under the conditional shuffle."""
    n_w = counts.occurrences(word)
    if n_w == 0:
        raise ValueError(f"word not in window: {word}")
    warnings: tuple[str, ...] = ()
    stderr = None
    if method == "analytic":
        value = _conditional_analytic(counts, word, mode)
    elif method == "mc":
        if scheme is None:
            kind = "within_thread" if mode == "users_within_threads" else "within_user"
            scheme = ShuffleScheme(kind, replicates=replicates)
        if scheme.replicates < 30:
            warnings = (f"mc estimate from only {scheme.replicates} replicates",)
            logger.warning("conditional_expected: %s", warnings[0])
        value, stderr = _conditional_mc(counts, word, mode, scheme)
    else:
        raise ValueError(f"unknown method: {method}")
    return ConditionalExpectation(value, method, warnings, stderr)


def dhat(
    counts: WindowCounts,
    word: str,
    method: str = "analytic",
    replicates: int = 1000,
) -> ConditionalMeasures:
    """Conditional dissemination: observed reach over the within-group
    expectation."""
    ue = conditional_expected(counts, word, "users_within_threads", method, replicates=replicates)
    te = conditional_expected(counts, word, "threads_within_users", method, replicates=replicates)
    u_w = counts.distinct_users(word)
    t_w = counts.distinct_threads(word)
    return ConditionalMeasures(
        word=word,
        u_w=u_w,
        t_w=t_w,
        u_expected_cond=ue.value,
        t_expected_cond=te.value,
        dhat_user=u_w / ue.value,
        dhat_thread=t_w / te.value,
        warnings=ue.warnings + te.warnings,
    )


def _expand_groups(offsets: np.ndarray, groups: np.ndarray):
    """Element ranges [offsets[g], offsets[g+1]) for each listed group,
    flattened."""
    lens = offsets[groups + 1] - offsets[groups]
    total = int(lens.sum())
    row = np.repeat(np.arange(len(groups)), lens)
    starts = np.repeat(offsets[groups], lens)
    prior = np.repeat(np.cumsum(lens) - lens, lens)
    src = starts + (np.arange(total) - prior)
    return row, src, lens


def dhat_table(
    counts: WindowCounts,
    word_ids: np.ndarray | None = None,
    chunk_pairs: int = 200_000,
) -> dict[str, np.ndarray]:
    """Analytic conditional expectations for many words at once.

    Returns arrays aligned with ``word_ids`` (default: every word above the
    occurrence threshold): u_expected_cond, t_expected_cond, dhat_user,
    dhat_thread.
    """
    if word_ids is None:
        word_ids = np.nonzero(counts.word_counts > 5)[0]
    word_ids = np.asarray(word_ids, dtype=np.int64)
    out_ue = np.zeros(len(word_ids))
    out_te = np.zeros(len(word_ids))
    id_order = np.argsort(word_ids)
    ids_sorted = word_ids[id_order]

    for mode in ("users_within_threads", "threads_within_users"):
        if mode == "users_within_threads":
            inc_word, inc_group, inc_draws = counts.wt_word, counts.wt_thread, counts.wt_count
            members, member_sizes, offsets = _ut_by_thread(counts)
            group_totals = counts.thread_tokens
            n_targets = counts.n_users
            out = out_ue
        else:
            inc_word, inc_group, inc_draws = counts.wu_word, counts.wu_user, counts.wu_count
            members, member_sizes, offsets = _ut_by_user(counts)
            group_totals = counts.user_tokens
            n_targets = counts.n_threads
            out = out_te

        mask = np.isin(inc_word, word_ids)
        w_all = inc_word[mask]
        g_all = inc_group[mask]
        d_all = inc_draws[mask]

        start = 0
        while start < len(w_all):
            # Chunk on whole-word boundaries so (word, target) aggregation
            # never straddles chunks.
            end = min(start + chunk_pairs, len(w_all))
            while end < len(w_all) and w_all[end] == w_all[end - 1]:
                end += 1
            w, g, d = w_all[start:end], g_all[start:end], d_all[start:end]
            row, src, _ = _expand_groups(offsets, g)
            tgt = members[src]
            log_absent = log_prob_absent(
                member_sizes[src].astype(np.float64),
                d[row].astype(np.float64),
                group_totals[g][row].astype(np.float64),
            )
            key = w[row] * n_targets + tgt
            uniq, inv = np.unique(key, return_inverse=True)
            sums = np.bincount(inv, weights=log_absent, minlength=len(uniq))
            contrib = 1.0 - np.exp(sums)
            word_pos = id_order[np.searchsorted(ids_sorted, uniq // n_targets)]
            np.add.at(out, word_pos, contrib)
            start = end

    u_w = counts.word_users[word_ids]
    t_w = counts.word_threads[word_ids]
    return {
        "word_ids": word_ids,
        "u_expected_cond": out_ue,
        "t_expected_cond": out_te,
        "dhat_user": u_w / out_ue,
        "dhat_thread": t_w / out_te,
    }
