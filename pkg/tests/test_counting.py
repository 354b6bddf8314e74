import numpy as np
import pytest

from wordniche.counting import build_counts, frequency
from conftest import make_slice, random_micro_slice


def test_single_post_counts():
    sl = make_slice([("u1", "t1", ["a", "a", "b"])])
    wc = build_counts(sl)
    wc.validate()
    assert wc.n_tokens == 3
    assert wc.occurrences("a") == 2
    assert wc.distinct_users("a") == 1
    assert wc.distinct_threads("a") == 1
    assert wc.user_tokens[wc.users.index("u1")] == 3


def test_two_users_one_thread():
    sl = make_slice([("u1", "t1", ["w", "x"]), ("u2", "t1", ["w", "x"])])
    wc = build_counts(sl)
    wc.validate()
    assert wc.occurrences("w") == 2
    assert wc.distinct_users("w") == 2
    assert wc.distinct_threads("w") == 1


def test_empty_slice_yields_zero_tables():
    sl = make_slice([])
    wc = build_counts(sl)
    wc.validate()
    assert wc.n_tokens == 0
    assert wc.n_words == 0
    assert wc.occurrences("anything") == 0


def test_conservation_on_random_micro_slices(rng):
    for _ in range(50):
        wc = build_counts(random_micro_slice(rng))
        wc.validate()
        # pairwise tables agree with the dense tallies
        for w in wc.words:
            wid = wc.word_id(w)
            assert wc.wu_count[wc.wu_word == wid].sum() == wc.word_counts[wid]
            assert wc.wt_count[wc.wt_word == wid].sum() == wc.word_counts[wid]


def test_order_independence(rng):
    sl = random_micro_slice(rng)
    wc1 = build_counts(sl)
    shuffled = make_slice([])
    shuffled.window = sl.window
    shuffled.posts = list(reversed(sl.posts))
    wc2 = build_counts(shuffled)
    assert wc1.words == wc2.words
    assert wc1.users == wc2.users
    assert np.array_equal(wc1.word_counts, wc2.word_counts)
    assert np.array_equal(wc1.word_users, wc2.word_users)
    assert np.array_equal(wc1.user_tokens, wc2.user_tokens)
    assert np.array_equal(wc1.wu_word, wc2.wu_word)
    assert np.array_equal(wc1.wu_count, wc2.wu_count)


def test_synthetic_totals_match_post_lengths(rng):
    posts = []
    total = 0
    for k in range(500):
        size = int(rng.integers(1, 20))
        total += size
        posts.append((f"u{k % 17}", f"t{k % 11}", ["x"] * size, k))
    wc = build_counts(make_slice(posts))
    wc.validate()
    assert wc.n_tokens == total
    assert int(wc.word_counts.sum()) == total


def test_frequency():
    sl = make_slice([("u1", "t1", ["a", "a", "b", "c"])])
    wc = build_counts(sl)
    assert frequency(wc, "a") == 0.5
    assert frequency(wc, "unseen") == 0.0


def test_frequency_empty_window_errors():
    wc = build_counts(make_slice([]))
    with pytest.raises(ValueError, match="empty window"):
        frequency(wc, "a")
