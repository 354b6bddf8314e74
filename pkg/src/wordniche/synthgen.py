"""Synthetic corpora with known ground truth.

Generates post streams in the same line-delimited record format the
ingester reads, with controllable activity heterogeneity, Zipfian
vocabulary, and per-word user/thread affinity. Affinity weights are drawn
from a symmetric Dirichlet with concentration theta: theta -> infinity
recovers the uniform null (measures near 1), small theta concentrates a
word's mass on few users/threads (clumped). Optional planted effects cover
rising words (silent early windows, sustained use later) and word-fate
damping applied from a given window on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import SECONDS_PER_DAY, format_timestamp, parse_timestamp

DEFAULT_START = "2000-01-01T00:00:00Z"


@dataclass
class RiserSpec:
    """A planted rising word: absent before ``start_window``, then given
    enough weight to clear the occurrence threshold in every later window."""

    count: int = 0
    start_window: int = 4
    weight: float = 5e-3


@dataclass
class FateSpec:
    """Per-word weight multipliers applied from ``from_window`` onward."""

    from_window: int
    multipliers: list[float]


@dataclass
class GenParams:
    n_users: int = 200
    n_threads: int = 150
    n_windows: int = 1
    posts_per_window: int | list[int] = 2000
    user_activity_exponent: float = 1.2
    thread_popularity_exponent: float = 1.0
    post_length: tuple = ("poisson", 30.0)  # ("poisson", mean) | ("fixed", n) | ("lognormal", mu, sigma)
    vocab_size: int = 1500
    zipf_exponent: float = 1.05
    theta_user: float | None = None  # None = uniform affinities
    theta_thread: float | None = None
    theta_user_per_word: list[float] | None = None
    theta_thread_per_word: list[float] | None = None
    risers: RiserSpec = field(default_factory=RiserSpec)
    fate: FateSpec | None = None
    start: str = DEFAULT_START
    window_days: int = 182
    seed: int = 0

    def validate(self) -> None:
        for name in ("n_users", "n_threads", "n_windows", "vocab_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if isinstance(self.posts_per_window, int):
            if self.posts_per_window < 1:
                raise ValueError("posts_per_window must be >= 1")
        elif len(self.posts_per_window) != self.n_windows or min(self.posts_per_window) < 1:
            raise ValueError("per-window post counts must cover every window and be >= 1")
        if self.risers.count > self.vocab_size:
            raise ValueError("more planted risers than vocabulary words")
        if self.theta_user_per_word is not None and len(self.theta_user_per_word) != self.vocab_size:
            raise ValueError("theta_user_per_word length must equal vocab_size")
        if self.theta_thread_per_word is not None and len(self.theta_thread_per_word) != self.vocab_size:
            raise ValueError("theta_thread_per_word length must equal vocab_size")
        if self.fate is not None and len(self.fate.multipliers) != self.vocab_size + self.risers.count:
            raise ValueError("fate multipliers must cover the full vocabulary")


def _zipf_weights(n: int, exponent: float) -> np.ndarray:
    w = (np.arange(1, n + 1, dtype=np.float64)) ** (-exponent)
    return w / w.sum()


def _affinity_matrix(
    rng: np.random.Generator,
    n_words: int,
    n_entities: int,
    theta_global: float | None,
    theta_per_word: list[float] | None,
) -> np.ndarray | None:
    """Per-word entity weights, mean 1 per row; None means all-uniform."""
    if theta_global is None and theta_per_word is None:
        return None
    thetas = np.full(n_words, np.inf if theta_global is None else theta_global)
    if theta_per_word is not None:
        thetas = np.asarray(theta_per_word, dtype=np.float64)
    mat = np.ones((n_words, n_entities))
    for k, theta in enumerate(thetas):
        if math.isinf(theta):
            continue
        mat[k] = rng.dirichlet(np.full(n_entities, theta)) * n_entities
    return mat


def _post_lengths(rng: np.random.Generator, spec: tuple, n: int) -> np.ndarray:
    kind = spec[0]
    if kind == "fixed":
        return np.full(n, int(spec[1]), dtype=np.int64)
    if kind == "poisson":
        return np.maximum(rng.poisson(float(spec[1]), size=n), 1)
    if kind == "lognormal":
        raw = rng.lognormal(float(spec[1]), float(spec[2]), size=n)
        return np.maximum(raw.astype(np.int64), 1)
    raise ValueError(f"unknown post length spec: {spec}")


def _sample_categorical(rng: np.random.Generator, cdf: np.ndarray, n: int) -> np.ndarray:
    return np.searchsorted(cdf, rng.random(n), side="right")


def generate(params: GenParams) -> tuple[list[dict], dict]:
    """Generate (records, manifest). Records match the ingest format; the
    manifest lists every planted property plus ground-truth totals."""
    params.validate()
    rng = np.random.default_rng(params.seed)

    n_risers = params.risers.count
    vocab_total = params.vocab_size + n_risers
    width = len(str(vocab_total))
    words = [f"w{k:0{width}d}" for k in range(params.vocab_size)]
    riser_words = [f"riser{k}" for k in range(n_risers)]
    all_words = words + riser_words

    base_weights = np.zeros(vocab_total)
    base_weights[: params.vocab_size] = _zipf_weights(params.vocab_size, params.zipf_exponent)
    if n_risers:
        base_weights[params.vocab_size :] = params.risers.weight

    theta_u = params.theta_user_per_word
    theta_t = params.theta_thread_per_word
    user_aff = _affinity_matrix(
        rng, vocab_total, params.n_users,
        params.theta_user, None if theta_u is None else list(theta_u) + [math.inf] * n_risers,
    )
    thread_aff = _affinity_matrix(
        rng, vocab_total, params.n_threads,
        params.theta_thread, None if theta_t is None else list(theta_t) + [math.inf] * n_risers,
    )

    activity = _zipf_weights(params.n_users, params.user_activity_exponent)
    rng.shuffle(activity)
    popularity = _zipf_weights(params.n_threads, params.thread_popularity_exponent)
    rng.shuffle(popularity)
    popularity_cdf = np.cumsum(popularity)

    start_ts = parse_timestamp(params.start)
    window_sec = params.window_days * SECONDS_PER_DAY

    records: list[dict] = []
    window_posts: list[int] = []
    window_tokens: list[int] = []

    for k in range(params.n_windows):
        mult = np.ones(vocab_total)
        if n_risers and k < params.risers.start_window:
            mult[params.vocab_size :] = 0.0
        if params.fate is not None and k >= params.fate.from_window:
            mult *= np.asarray(params.fate.multipliers)

        window_weights = base_weights * mult
        uniform_words = user_aff is None and thread_aff is None

        if isinstance(params.posts_per_window, int):
            n_posts = params.posts_per_window
        else:
            n_posts = params.posts_per_window[k]
        posts_per_user = rng.multinomial(n_posts, activity)
        post_users = np.repeat(np.arange(params.n_users), posts_per_user)
        post_threads = _sample_categorical(rng, popularity_cdf, n_posts)
        lengths = _post_lengths(rng, params.post_length, n_posts)

        if uniform_words:
            q = window_weights / window_weights.sum()
            cdf = np.cumsum(q)
            tokens_flat = _sample_categorical(rng, cdf, int(lengths.sum()))
            bounds = np.concatenate([[0], np.cumsum(lengths)])
        else:
            ua = user_aff if user_aff is not None else np.ones((vocab_total, 1))
            ta = thread_aff if thread_aff is not None else np.ones((vocab_total, 1))
            tokens_per_post = []
            for j in range(n_posts):
                u_col = ua[:, post_users[j]] if user_aff is not None else 1.0
                t_col = ta[:, post_threads[j]] if thread_aff is not None else 1.0
                q = window_weights * u_col * t_col
                q_sum = q.sum()
                if q_sum <= 0:
                    raise ValueError("degenerate token distribution for a post")
                cdf = np.cumsum(q / q_sum)
                tokens_per_post.append(_sample_categorical(rng, cdf, int(lengths[j])))
            tokens_flat = np.concatenate(tokens_per_post) if tokens_per_post else np.empty(0, np.int64)
            bounds = np.concatenate([[0], np.cumsum(lengths)])

        window_start = start_ts + k * window_sec
        for j in range(n_posts):
            toks = tokens_flat[bounds[j] : bounds[j + 1]]
            ts = window_start + (j * window_sec) // max(n_posts, 1)
            records.append(
                {
                    "post_id": f"p{k}_{j}",
                    "user_id": f"u{post_users[j]}",
                    "thread_id": f"t{k}_{post_threads[j]}",
                    "timestamp": format_timestamp(ts),
                    "body": " ".join(all_words[w] for w in toks),
                }
            )
        window_posts.append(n_posts)
        window_tokens.append(int(lengths.sum()))

    manifest = {
        "seed": params.seed,
        "n_users": params.n_users,
        "n_threads": params.n_threads,
        "n_windows": params.n_windows,
        "vocab_size": params.vocab_size,
        "zipf_exponent": params.zipf_exponent,
        "theta_user": _theta_list(params.theta_user, params.theta_user_per_word, params.vocab_size),
        "theta_thread": _theta_list(params.theta_thread, params.theta_thread_per_word, params.vocab_size),
        "words": words,
        "riser_words": riser_words,
        "riser_start_window": params.risers.start_window if n_risers else None,
        "fate_from_window": params.fate.from_window if params.fate else None,
        "fate_multipliers": list(params.fate.multipliers) if params.fate else None,
        "window_posts": window_posts,
        "window_tokens": window_tokens,
        "total_posts": int(sum(window_posts)),
        "total_tokens": int(sum(window_tokens)),
        "start": params.start,
        "window_days": params.window_days,
    }
    return records, manifest


def _theta_list(theta_global, theta_per_word, vocab_size):
    if theta_per_word is not None:
        return [None if math.isinf(t) else float(t) for t in theta_per_word]
    if theta_global is None or math.isinf(theta_global):
        return None
    return [float(theta_global)] * vocab_size


def write_corpus(path: str | Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for rec in records:
            handle.write(json.dumps(rec, sort_keys=True) + "\n")


def records_to_lines(records: list[dict]) -> list[str]:
    return [json.dumps(rec, sort_keys=True) for rec in records]
