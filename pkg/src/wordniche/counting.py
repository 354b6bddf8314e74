"""Per-window count tables.

Everything downstream derives from the tables built here: total token
counts, per-user and per-thread token totals, distinct-entity counts per
word, and the sparse (word, user), (word, thread), (user, thread)
incidence tables. Counts are exact integers; vocabulary, user, and thread
id orders are canonicalized (sorted) so results are independent of post
order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Window, WindowSlice


@dataclass
class TokenSlots:
    """Per-token (slot) assignment arrays, aligned index-for-index."""

    word: np.ndarray
    user: np.ndarray
    thread: np.ndarray


@dataclass
class WindowCounts:
    window: Window | None
    words: list[str]
    users: list[str]
    threads: list[str]
    n_tokens: int
    word_counts: np.ndarray  # word id -> occurrences
    word_users: np.ndarray  # word id -> distinct users
    word_threads: np.ndarray  # word id -> distinct threads
    user_tokens: np.ndarray  # user id -> token total
    thread_tokens: np.ndarray  # thread id -> token total
    wu_word: np.ndarray  # (word, user) incidence, sorted by (word, user)
    wu_user: np.ndarray
    wu_count: np.ndarray
    wt_word: np.ndarray  # (word, thread) incidence, sorted by (word, thread)
    wt_thread: np.ndarray
    wt_count: np.ndarray
    ut_user: np.ndarray  # (user, thread) incidence, sorted by (user, thread)
    ut_thread: np.ndarray
    ut_count: np.ndarray
    slots: TokenSlots | None = None
    _word_index: dict[str, int] = field(default_factory=dict, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_words(self) -> int:
        return len(self.words)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_threads(self) -> int:
        return len(self.threads)

    def word_id(self, word: str) -> int | None:
        return self._word_index.get(word)

    def occurrences(self, word: str) -> int:
        wid = self.word_id(word)
        return int(self.word_counts[wid]) if wid is not None else 0

    def distinct_users(self, word: str) -> int:
        wid = self.word_id(word)
        return int(self.word_users[wid]) if wid is not None else 0

    def distinct_threads(self, word: str) -> int:
        wid = self.word_id(word)
        return int(self.word_threads[wid]) if wid is not None else 0

    def frequency(self, word: str) -> float:
        if self.n_tokens == 0:
            raise ValueError("empty window")
        return self.occurrences(word) / self.n_tokens

    def validate(self) -> None:
        """Assert the conservation identities between all tables."""
        assert int(self.word_counts.sum()) == self.n_tokens
        assert int(self.user_tokens.sum()) == self.n_tokens
        assert int(self.thread_tokens.sum()) == self.n_tokens
        assert int(self.wu_count.sum()) == self.n_tokens
        assert int(self.wt_count.sum()) == self.n_tokens
        assert int(self.ut_count.sum()) == self.n_tokens
        per_word_u = np.bincount(
            self.wu_word, weights=self.wu_count, minlength=self.n_words
        )
        per_word_t = np.bincount(
            self.wt_word, weights=self.wt_count, minlength=self.n_words
        )
        assert np.array_equal(per_word_u.astype(np.int64), self.word_counts)
        assert np.array_equal(per_word_t.astype(np.int64), self.word_counts)
        per_user = np.bincount(
            self.ut_user, weights=self.ut_count, minlength=self.n_users
        )
        assert np.array_equal(per_user.astype(np.int64), self.user_tokens)
        assert np.all(self.word_users <= np.minimum(self.word_counts, self.n_users))
        assert np.all(self.word_threads <= np.minimum(self.word_counts, self.n_threads))


def _pair_table(a: np.ndarray, b: np.ndarray, b_size: int):
    """Distinct (a, b) pairs with multiplicities, sorted by (a, b)."""
    key = a.astype(np.int64) * b_size + b
    uniq, counts = np.unique(key, return_counts=True)
    return uniq // b_size, uniq % b_size, counts.astype(np.int64)


def build_counts(slice_: WindowSlice, keep_slots: bool = True) -> WindowCounts:
    """Build every count table for one window slice.

    Pure function of the slice contents; permuting posts yields identical
    tables because ids are sorted before tabulation.
    """
    word_map: dict[str, int] = {}
    user_map: dict[str, int] = {}
    thread_map: dict[str, int] = {}
    word_col: list[int] = []
    user_col: list[int] = []
    thread_col: list[int] = []

    for tp in slice_.posts:
        if not tp.tokens:
            continue
        u = user_map.setdefault(tp.user_id, len(user_map))
        t = thread_map.setdefault(tp.thread_id, len(thread_map))
        ids = [word_map.setdefault(tok, len(word_map)) for tok in tp.tokens]
        word_col.extend(ids)
        user_col.extend([u] * len(ids))
        thread_col.extend([t] * len(ids))

    n_tokens = len(word_col)
    words_raw = list(word_map)
    users_raw = list(user_map)
    threads_raw = list(thread_map)

    # Canonicalize id order so tables do not depend on post order.
    def remap(names: list[str]) -> tuple[list[str], np.ndarray]:
        order = sorted(range(len(names)), key=names.__getitem__)
        inverse = np.empty(len(names), dtype=np.int64)
        inverse[order] = np.arange(len(names))
        return [names[i] for i in order], inverse

    words, word_inv = remap(words_raw)
    users, user_inv = remap(users_raw)
    threads, thread_inv = remap(threads_raw)

    word_arr = word_inv[np.asarray(word_col, dtype=np.int64)] if n_tokens else np.empty(0, np.int64)
    user_arr = user_inv[np.asarray(user_col, dtype=np.int64)] if n_tokens else np.empty(0, np.int64)
    thread_arr = thread_inv[np.asarray(thread_col, dtype=np.int64)] if n_tokens else np.empty(0, np.int64)

    n_words, n_users, n_threads = len(words), len(users), len(threads)
    word_counts = np.bincount(word_arr, minlength=n_words).astype(np.int64)
    user_tokens = np.bincount(user_arr, minlength=n_users).astype(np.int64)
    thread_tokens = np.bincount(thread_arr, minlength=n_threads).astype(np.int64)

    wu_word, wu_user, wu_count = _pair_table(word_arr, user_arr, max(n_users, 1))
    wt_word, wt_thread, wt_count = _pair_table(word_arr, thread_arr, max(n_threads, 1))
    ut_user, ut_thread, ut_count = _pair_table(user_arr, thread_arr, max(n_threads, 1))

    word_users = np.bincount(wu_word, minlength=n_words).astype(np.int64)
    word_threads = np.bincount(wt_word, minlength=n_words).astype(np.int64)

    return WindowCounts(
        window=slice_.window,
        words=words,
        users=users,
        threads=threads,
        n_tokens=n_tokens,
        word_counts=word_counts,
        word_users=word_users,
        word_threads=word_threads,
        user_tokens=user_tokens,
        thread_tokens=thread_tokens,
        wu_word=wu_word,
        wu_user=wu_user,
        wu_count=wu_count,
        wt_word=wt_word,
        wt_thread=wt_thread,
        wt_count=wt_count,
        ut_user=ut_user,
        ut_thread=ut_thread,
        ut_count=ut_count,
        slots=TokenSlots(word_arr, user_arr, thread_arr) if keep_slots else None,
        _word_index={w: i for i, w in enumerate(words)},
    )


def frequency(counts: WindowCounts, word: str) -> float:
    """Occurrence fraction N_w / N_A of a word in one window."""
    return counts.frequency(word)
