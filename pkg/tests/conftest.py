"""Shared builders and brute-force oracles for the test suite."""

from __future__ import annotations

import json
from itertools import combinations, product

import numpy as np
import pytest

from wordniche.corpus import (
    Post,
    TokenizedPost,
    Window,
    WindowSlice,
    ingest,
    partition_windows,
    tokenize_corpus,
)

BASE_TS = 883_612_800  # 1998-01-01T00:00:00Z


def make_slice(posts, window_index: int = 0, window_days: int = 182) -> WindowSlice:
    """Build a WindowSlice from (user, thread, tokens) or
    (user, thread, tokens, ts_offset) tuples."""
    length = window_days * 86_400
    start = BASE_TS + window_index * length
    out = []
    for k, spec in enumerate(posts):
        user, thread, tokens = spec[:3]
        offset = spec[3] if len(spec) > 3 else k
        post = Post(f"p{k}", user, thread, start + offset, " ".join(tokens))
        out.append(TokenizedPost(post, tuple(tokens)))
    out.sort(key=lambda p: p.timestamp)
    return WindowSlice(Window(window_index, start, start + length), out)


def corpus_lines(posts) -> list[str]:
    """JSONL lines from (post_id, user, thread, iso_ts, body) tuples."""
    return [
        json.dumps(
            {"post_id": p[0], "user_id": p[1], "thread_id": p[2], "timestamp": p[3], "body": p[4]}
        )
        for p in posts
    ]


def slices_from_lines(lines, **kwargs) -> list[WindowSlice]:
    return partition_windows(tokenize_corpus(ingest(lines)), **kwargs)


def brute_expected_distinct(entity_of_slot, n_draws: int) -> float:
    """Mean distinct-entity count over all equally likely slot subsets."""
    slots = range(len(entity_of_slot))
    total = 0
    count = 0
    for subset in combinations(slots, n_draws):
        total += len({entity_of_slot[s] for s in subset})
        count += 1
    return total / count


def brute_conditional_distinct(group_slots, target_of_slot, draws_per_group) -> float:
    """Mean distinct targets over the joint enumeration of per-group
    subsets (groups shuffle independently)."""
    spaces = []
    for slots, d in zip(group_slots, draws_per_group):
        spaces.append(list(combinations(slots, d)))
    total = 0
    count = 0
    for combo in product(*spaces):
        hit = set()
        for subset in combo:
            hit.update(target_of_slot[s] for s in subset)
        total += len(hit)
        count += 1
    return total / count


def random_micro_slice(rng: np.random.Generator, max_tokens: int = 12) -> WindowSlice:
    """A random tiny window: a handful of users, threads, and words."""
    n_tokens = int(rng.integers(2, max_tokens + 1))
    n_users = int(rng.integers(1, 5))
    n_threads = int(rng.integers(1, 4))
    n_words = int(rng.integers(1, 6))
    posts = []
    remaining = n_tokens
    k = 0
    while remaining > 0:
        size = int(rng.integers(1, remaining + 1))
        remaining -= size
        tokens = [f"w{int(rng.integers(n_words))}" for _ in range(size)]
        posts.append((f"u{int(rng.integers(n_users))}", f"t{int(rng.integers(n_threads))}", tokens, k))
        k += 1
    return make_slice(posts)


@pytest.fixture
def rng():
    return np.random.default_rng(20_240_501)
