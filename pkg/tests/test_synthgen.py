import numpy as np
import pytest
from scipy.stats import spearmanr

from wordniche.corpus import ingest, partition_windows, tokenize_corpus
from wordniche.counting import build_counts
from wordniche.dissemination import measure_table
from wordniche.synthgen import FateSpec, GenParams, RiserSpec, generate, records_to_lines


def _windows(records):
    return partition_windows(tokenize_corpus(ingest(records_to_lines(records))))


def test_generate_deterministic():
    params = GenParams(n_users=40, n_threads=30, posts_per_window=200, vocab_size=120, seed=99)
    a, ma = generate(params)
    b, mb = generate(params)
    assert a == b
    assert ma == mb


def test_manifest_recount_roundtrip():
    params = GenParams(
        n_users=50, n_threads=40, n_windows=2, posts_per_window=250,
        vocab_size=150, seed=12,
    )
    records, manifest = generate(params)
    slices = _windows(records)
    assert len(records) == manifest["total_posts"]
    assert [sl.n_posts for sl in slices] == manifest["window_posts"]
    totals = [build_counts(sl).n_tokens for sl in slices]
    assert totals == manifest["window_tokens"]
    assert sum(totals) == manifest["total_tokens"]


def test_uniform_affinities_give_near_unit_dissemination():
    params = GenParams(
        n_users=300, n_threads=200, posts_per_window=1500,
        post_length=("poisson", 20.0), vocab_size=300, zipf_exponent=0.8,
        user_activity_exponent=0.5, thread_popularity_exponent=0.5, seed=42,
    )
    records, _ = generate(params)
    wc = build_counts(_windows(records)[0])
    table = measure_table(wc, baseline="exact")
    heavy = wc.word_counts >= 20
    assert heavy.sum() > 100
    assert 0.95 <= float(np.mean(table.d_user[heavy])) <= 1.05
    assert 0.95 <= float(np.mean(table.d_thread[heavy])) <= 1.05


def test_low_theta_means_lower_dissemination():
    common = dict(
        n_users=150, n_threads=100, posts_per_window=1200,
        post_length=("poisson", 20.0), vocab_size=200, zipf_exponent=0.6, seed=7,
    )
    clumped, _ = generate(GenParams(theta_user=0.1, **common))
    spread, _ = generate(GenParams(theta_user=10.0, **common))
    d = {}
    for name, records in (("clumped", clumped), ("spread", spread)):
        wc = build_counts(_windows(records)[0])
        table = measure_table(wc, baseline="exact")
        mask = wc.word_counts >= 20
        d[name] = float(np.median(table.d_user[mask]))
    assert d["clumped"] < d["spread"]


def test_theta_ranking_matches_measured_dissemination():
    vocab = 150
    rng = np.random.default_rng(3)
    thetas = 10.0 ** rng.uniform(-2.0, 1.0, size=vocab)
    params = GenParams(
        n_users=150, n_threads=100, posts_per_window=4000,
        post_length=("poisson", 20.0), vocab_size=vocab, zipf_exponent=0.3,
        theta_user_per_word=list(thetas), seed=4,
    )
    records, manifest = generate(params)
    wc = build_counts(_windows(records)[0])
    table = measure_table(wc, baseline="exact")
    rows = []
    for k, word in enumerate(manifest["words"]):
        i = wc.word_id(word)
        if i is not None and wc.word_counts[i] >= 50:
            rows.append((thetas[k], table.d_user[i]))
    assert len(rows) > 60
    rho, _ = spearmanr([r[0] for r in rows], [r[1] for r in rows])
    assert rho > 0.8


def test_planted_riser_structure():
    params = GenParams(
        n_users=60, n_threads=40, n_windows=8, posts_per_window=400,
        vocab_size=200, risers=RiserSpec(count=2, start_window=4, weight=4e-3), seed=6,
    )
    records, manifest = generate(params)
    slices = _windows(records)
    assert manifest["riser_words"] == ["riser0", "riser1"]
    for k, sl in enumerate(slices):
        wc = build_counts(sl)
        for word in manifest["riser_words"]:
            n = wc.occurrences(word)
            if k < 4:
                assert n == 0
            else:
                assert n > 5


def test_fate_multipliers_damp_words():
    vocab = 50
    mult = [1.0] * vocab
    mult[0] = 0.0
    params = GenParams(
        n_users=40, n_threads=30, n_windows=2, posts_per_window=500,
        vocab_size=vocab, zipf_exponent=0.2,
        fate=FateSpec(from_window=1, multipliers=mult), seed=5,
    )
    records, manifest = generate(params)
    slices = _windows(records)
    first = build_counts(slices[0])
    second = build_counts(slices[1])
    word = manifest["words"][0]
    assert first.occurrences(word) > 0
    assert second.occurrences(word) == 0


def test_infeasible_params_error():
    with pytest.raises(ValueError):
        generate(GenParams(vocab_size=2, risers=RiserSpec(count=5)))
    with pytest.raises(ValueError):
        generate(GenParams(n_users=0))
    with pytest.raises(ValueError):
        generate(GenParams(vocab_size=10, fate=FateSpec(0, [1.0] * 3)))
