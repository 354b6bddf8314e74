import numpy as np
import pytest

from wordniche.corpus import ingest, partition_windows, tokenize_corpus
from wordniche.trimming import (
    TrimParams,
    dissemination_summary,
    trim_window,
    trimmed_correlations,
)
from wordniche.synthgen import GenParams, generate, records_to_lines
from conftest import make_slice


def _slices(params):
    records, _ = generate(params)
    return partition_windows(tokenize_corpus(ingest(records_to_lines(records))))


def _assert_postconditions(slice_, params):
    users, threads, pairs = {}, {}, set()
    for p in slice_.posts:
        assert len(p.tokens) == params.post_length
        key = (p.user_id, p.thread_id)
        assert key not in pairs
        pairs.add(key)
        users[p.user_id] = users.get(p.user_id, 0) + 1
        threads[p.thread_id] = threads.get(p.thread_id, 0) + 1
    assert all(c <= params.max_posts_per_entity for c in users.values())
    assert all(c <= params.max_posts_per_entity for c in threads.values())
    assert len(users) == len(threads)


def test_fixed_point_slice_unchanged():
    posts = [
        ("u1", "t1", ["a", "b"], 0),
        ("u2", "t2", ["c", "d"], 1),
    ]
    sl = make_slice(posts)
    params = TrimParams(post_length=2, max_posts_per_entity=3, seed=1)
    out, report = trim_window(sl, params)
    assert [p.post.post_id for p in out.posts] == [p.post.post_id for p in sl.posts]
    assert [p.tokens for p in out.posts] == [p.tokens for p in sl.posts]
    assert report.posts_removed == 0
    assert report.balanced


def test_single_long_post_truncated():
    sl = make_slice([("u1", "t1", ["x"] * 100)])
    out, report = trim_window(sl, TrimParams(post_length=40))
    assert len(out.posts) == 1
    assert len(out.posts[0].tokens) == 40
    assert report.n_users == 1 and report.n_threads == 1


def test_short_posts_dropped():
    sl = make_slice([("u1", "t1", ["x"] * 3), ("u2", "t2", ["y"] * 10)])
    out, _ = trim_window(sl, TrimParams(post_length=5))
    assert [p.user_id for p in out.posts] == ["u2"]


def test_earliest_post_per_user_thread_kept():
    posts = [
        ("u1", "t1", ["a", "b", "c"], 5),
        ("u1", "t1", ["d", "e", "f"], 1),
        ("u1", "t2", ["g", "h", "i"], 2),
    ]
    sl = make_slice(posts)
    out, _ = trim_window(sl, TrimParams(post_length=3, seed=0))
    kept = {(p.user_id, p.thread_id): p.tokens for p in out.posts}
    assert kept[("u1", "t1")] == ("d", "e", "f")


def test_heavy_tailed_window_postconditions():
    params = GenParams(
        n_users=120, n_threads=60, posts_per_window=900,
        post_length=("lognormal", 3.0, 0.7), vocab_size=400,
        user_activity_exponent=1.3, thread_popularity_exponent=1.1, seed=17,
    )
    sl = _slices(params)[0]
    trim_params = TrimParams(post_length=15, max_posts_per_entity=5, seed=3)
    out, report = trim_window(sl, trim_params)
    assert report.balanced
    assert report.posts_kept == len(out.posts)
    assert report.posts_kept + report.posts_removed == len(sl.posts)
    _assert_postconditions(out, trim_params)
    assert 0.0 <= report.ks_distance <= 1.0


def test_trim_deterministic_and_idempotent():
    params = GenParams(
        n_users=80, n_threads=50, posts_per_window=600,
        post_length=("lognormal", 3.0, 0.6), vocab_size=300, seed=23,
    )
    sl = _slices(params)[0]
    trim_params = TrimParams(post_length=12, max_posts_per_entity=4, seed=9)
    out1, rep1 = trim_window(sl, trim_params)
    out2, rep2 = trim_window(sl, trim_params)
    ids1 = [(p.post.post_id, p.tokens) for p in out1.posts]
    ids2 = [(p.post.post_id, p.tokens) for p in out2.posts]
    assert ids1 == ids2
    assert rep1 == rep2
    again, rep3 = trim_window(out1, trim_params)
    assert [(p.post.post_id, p.tokens) for p in again.posts] == ids1
    assert rep3.posts_removed == 0


def test_balance_iteration_cap_sets_failure_flag():
    sl = make_slice([("u1", "t1", ["a", "b"], 0), ("u2", "t1", ["c", "d"], 1)])
    params = TrimParams(post_length=2, seed=0, max_balance_iterations=0)
    out, report = trim_window(sl, params)
    assert not report.balanced
    assert report.n_users != report.n_threads
    assert out.posts  # trimmed slice still returned


def test_empty_slice_errors():
    sl = make_slice([])
    with pytest.raises(ValueError, match="empty"):
        trim_window(sl, TrimParams(post_length=2))


def test_correlation_is_one_when_conditional_equals_global():
    # a single thread holding the whole window makes the within-thread
    # shuffle identical to the global shuffle, so the measures coincide
    rng = np.random.default_rng(5)
    posts = []
    for k in range(60):
        tokens = [f"w{int(rng.integers(30))}" for _ in range(12)]
        posts.append((f"u{k % 25}", "t0", tokens, k))
    sl = make_slice(posts)
    summary = trimmed_correlations([sl], min_words=5)
    assert len(summary.per_window) == 1
    r = summary.per_window[0].r
    assert r[("dhat_user", "d_user")] == pytest.approx(1.0, abs=1e-9)


def test_independent_affinities_give_partial_correlation():
    params = GenParams(
        n_users=100, n_threads=80, posts_per_window=1200,
        post_length=("poisson", 18.0), vocab_size=250, zipf_exponent=0.6,
        theta_user=0.3, theta_thread=0.3, seed=29,
    )
    sl = _slices(params)[0]
    summary = trimmed_correlations([sl], min_words=20)
    r = summary.per_window[0].r[("d_user", "d_thread")]
    assert 0.0 < r < 1.0


def test_underpopulated_window_skipped():
    sl = make_slice([("u1", "t1", ["a"] * 8, 0)])
    summary = trimmed_correlations([sl], min_words=30)
    assert summary.per_window == []
    assert summary.skipped == [0]


def test_summary_medians_near_one_for_uniform_corpus():
    params = GenParams(
        n_users=200, n_threads=150, posts_per_window=1500,
        post_length=("poisson", 18.0), vocab_size=250, zipf_exponent=0.6,
        user_activity_exponent=0.5, thread_popularity_exponent=0.5, seed=41,
    )
    sl = _slices(params)[0]
    out = {s.name: s for s in dissemination_summary([sl])}
    for name in ("d_user", "d_thread", "dhat_user", "dhat_thread"):
        assert out[name].n > 100
        assert abs(out[name].median - 1.0) < 0.05


def test_conditional_median_above_global_on_clumped_corpus():
    params = GenParams(
        n_users=120, n_threads=90, posts_per_window=1500,
        post_length=("poisson", 18.0), vocab_size=250, zipf_exponent=0.6,
        theta_user=0.15, theta_thread=0.15, seed=53,
    )
    sl = _slices(params)[0]
    out = {s.name: s for s in dissemination_summary([sl])}
    assert out["d_user"].median <= out["dhat_user"].median
    assert out["d_thread"].median <= out["dhat_thread"].median
    assert out["d_user"].median < 0.9  # genuinely clumped input
    assert out["dhat_user-d_user"].n == out["d_user"].n


def test_summary_quantiles_ordered():
    params = GenParams(
        n_users=80, n_threads=60, posts_per_window=800,
        post_length=("poisson", 15.0), vocab_size=200, seed=61,
    )
    sl = _slices(params)[0]
    for s in dissemination_summary([sl]):
        if s.n == 0:
            continue
        assert s.o12_5 <= s.q25 <= s.median <= s.q75 <= s.o87_5
