from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import pyar_corpus, topic_gap, two_topic_corpus
from hinglish_emo.embeddings import (
    EmbeddingSet,
    SgnsConfig,
    _pair_update,
    bucket_ids,
    cosine,
    embedding_corpus,
    fasttext_vector,
    fnv1a,
    init_embeddings,
    load_vec,
    nearest_neighbors,
    ngrams,
    save_vec,
    sgns_loss_grads,
    sgns_step,
    subword_sidecar,
    train_sgns,
    word_vectors,
)
from hinglish_emo.numerics.gradcheck import numeric_grad, relative_error
from hinglish_emo.vocab import build_negative_table, build_vocab, encode_sequence


def _train(sents, **kw):
    v = build_vocab((t for s in sents for t in s.split()), min_count=1)
    corpus = [encode_sequence(s, v) for s in sents]
    return train_sgns(corpus, v, build_negative_table(v), SgnsConfig(**kw)), v, corpus


def _random_set(mode="word", V=6, d=4, B=50, seed=0):
    r = np.random.default_rng(seed)
    toks = [f"w{i}" for i in range(V)]
    buckets = r.normal(0, 0.3, (B, d)) if mode == "subword" else None
    return EmbeddingSet(toks, r.normal(0, 0.3, (V, d)), r.normal(0, 0.3, (V, d)), buckets, mode, 3, 6)


# ------------------------------------------------------------------ n-grams

def test_ngrams_hand_example():
    assert ngrams("ab") == ["<ab", "ab>", "<ab>"]


def test_ngrams_single_window():
    assert ngrams("ab", 4, 4) == ["<ab>"]


def test_ngrams_pyar_pyaar_share():
    assert "<py" in set(ngrams("pyar")) & set(ngrams("pyaar"))


def test_ngrams_empty_raises():
    with pytest.raises(ValueError):
        ngrams("")


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="abcdéय", min_size=1, max_size=12), st.integers(1, 4), st.integers(0, 4))
def test_ngram_count_formula_and_brute_force(word, nmin, extra):
    nmax = nmin + extra
    grams = ngrams(word, nmin, nmax)
    L = len(word) + 2
    formula = sum(max(0, L - n + 1) for n in range(nmin, nmax + 1))
    formula += 0 if nmin <= L <= nmax else 1
    assert len(grams) == formula
    w = f"<{word}>"
    brute = sorted({(i, j) for i in range(L) for j in range(i + 1, L + 1) if nmin <= j - i <= nmax} | {(0, L)})
    assert sorted(grams) == sorted(w[i:j] for i, j in brute)
    assert grams[-1] == w and grams.count(w) == 1


def test_fnv1a_reference_values():
    # published FNV-1a 32-bit test vectors
    assert fnv1a("") == 0x811C9DC5
    assert fnv1a("a") == 0xE40C292C
    assert fnv1a("foobar") == 0xBF9CF968


# ---------------------------------------------------------------- objective

def test_zero_vectors_loss_is_k_plus_one_ln2():
    for K in (1, 5, 10):
        loss, *_ = sgns_loss_grads(np.zeros(7), np.zeros(7), np.zeros((K, 7)))
        assert abs(loss - (1 + K) * math.log(2)) <= 1e-12


def test_loss_at_dot_two_without_negatives():
    v = np.array([1.0, 1.0, 0.0])
    u = np.array([1.0, 1.0, 5.0])
    loss, *_ = sgns_loss_grads(v, u, np.zeros((0, 3)))
    assert loss == pytest.approx(-math.log(1 / (1 + math.exp(-2))), abs=1e-15)
    assert round(loss, 4) == 0.1269


@pytest.mark.parametrize("seed", range(5))
def test_sgns_grads_match_finite_differences(seed):
    r = np.random.default_rng(seed)
    v, u, un = r.normal(size=5), r.normal(size=5), r.normal(size=(3, 5))
    _, gv, gc, gn = sgns_loss_grads(v, u, un)
    assert relative_error(gv, numeric_grad(lambda: sgns_loss_grads(v, u, un)[0], v)) <= 1e-4
    assert relative_error(gc, numeric_grad(lambda: sgns_loss_grads(v, u, un)[0], u)) <= 1e-4
    assert relative_error(gn, numeric_grad(lambda: sgns_loss_grads(v, u, un)[0], un)) <= 1e-4


@pytest.mark.parametrize("lr", [0.001, 0.01, 0.025, 0.05])
@pytest.mark.parametrize("mode", ["word", "subword"])
def test_sgns_step_monotone(lr, mode):
    E = _random_set(mode)
    losses = [sgns_step(0, 1, [2, 3, 4], E, lr) for _ in range(200)]
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_sgns_step_rejects_overlapping_negatives():
    with pytest.raises(ValueError):
        sgns_step(0, 1, [1, 2], _random_set(), 0.01)


@pytest.mark.parametrize("mode", ["word", "subword"])
def test_pair_kernel_matches_reference_step(mode):
    ref = _random_set(mode, seed=3)
    fast = ref.copy()
    neg = np.array([2, 5, 3], dtype=np.int64)
    b = bucket_ids("w0", ref.buckets.shape[0], 3, 6) if mode == "subword" else np.zeros(0, np.int64)
    buckets = fast.buckets if mode == "subword" else np.zeros((1, 4))
    d = ref.dim
    for _ in range(5):
        l_ref = sgns_step(0, 1, neg, ref, 0.03)
        l_fast = _pair_update(fast.input, fast.output, buckets, b, 0, len(b), 0, 1, neg, 3, 0.03,
                              np.empty(d), np.empty(d), np.empty(3))
        assert l_fast == pytest.approx(l_ref, abs=1e-12)
    np.testing.assert_allclose(fast.input, ref.input, atol=1e-12)
    np.testing.assert_allclose(fast.output, ref.output, atol=1e-12)
    if mode == "subword":
        np.testing.assert_allclose(fast.buckets, ref.buckets, atol=1e-12)


# ----------------------------------------------------------------- training

def test_zero_epochs_returns_init():
    sents = ["a b c", "b c a"]
    E, v, _ = _train(sents, dim=8, epochs=0)
    init = init_embeddings(list(v.tokens[2:]), SgnsConfig(dim=8, epochs=0))
    np.testing.assert_array_equal(E.input, init.input)
    np.testing.assert_array_equal(E.output, init.output)


def test_training_deterministic():
    sents, *_ = two_topic_corpus(6000, n_words=10)
    a, *_ = _train(sents, dim=16, epochs=2, seed=7)
    b, *_ = _train(sents, dim=16, epochs=2, seed=7)
    c, *_ = _train(sents, dim=16, epochs=2, seed=8)
    assert a.input.tobytes() == b.input.tobytes()
    assert not np.array_equal(a.input, c.input)


def test_two_topics_separate_small():
    sents, A, B = two_topic_corpus(30_000, n_words=10)
    E, *_ = _train(sents, dim=32, epochs=3)
    within, cross = topic_gap(word_vectors(E), E.index, A, B)
    assert within > cross + 0.2
    assert np.all(np.isfinite(E.input)) and np.all(np.isfinite(E.output))


def test_empty_corpus_raises():
    v = build_vocab(["a"], min_count=1)
    with pytest.raises(ValueError):
        train_sgns([np.zeros(0, dtype=np.int64)], v, build_negative_table(v), SgnsConfig(dim=4))


def test_subsampling_keeps_training_finite():
    sents, A, B = two_topic_corpus(20_000, n_words=10)
    E, *_ = _train(sents, dim=16, epochs=1, sample=1e-3)
    assert np.all(np.isfinite(E.input))


def test_subword_oov_variant_near_base():
    E, v, _ = _train(pyar_corpus(), dim=32, epochs=5, mode="subword", buckets=20_000)
    assert "pyaar" not in E.index
    oov = fasttext_vector("pyaar", E)
    W = word_vectors(E)
    base = cosine(oov, W[E.index["pyar"]])
    others = [cosine(oov, W[i]) for t, i in E.index.items() if t != "pyar"]
    assert base > np.median(others)
    assert base > cosine(oov, W[E.index["cricket"]])


def test_fasttext_vector_mean_of_identical():
    E = _random_set("subword")
    E.buckets[:] = 2.5
    E.input[:] = 2.5
    np.testing.assert_allclose(fasttext_vector("w1", E), 2.5)
    np.testing.assert_allclose(fasttext_vector("unseen", E), 2.5)


def test_fasttext_vector_errors():
    with pytest.raises(ValueError):
        fasttext_vector("w1", _random_set("word"))
    with pytest.raises(ValueError):
        fasttext_vector("", _random_set("subword"))


def test_embedding_corpus_variants():
    assert embedding_corpus(["a"], ["b"], "hinglish") == ["a"]
    assert embedding_corpus(["a"], ["b"], "hinglish+english") == ["a", "b"]
    with pytest.raises(ValueError):
        embedding_corpus(["a"], [], "hinglish+english")
    with pytest.raises(ValueError):
        embedding_corpus(["a"], ["b"], "english")


# --------------------------------------------------------------- neighbours

def test_neighbors_hand_matrix():
    E = EmbeddingSet(["q", "x", "y", "z"], np.array([[1.0, 0, 0], [1, 1, 0], [0, 0, 1], [1, 0.1, 0]]))
    got = nearest_neighbors("q", E, k=10)
    assert [t for t, _ in got] == ["z", "x", "y"]
    assert got[0][1] == pytest.approx(1 / math.sqrt(1.01))
    assert got[1][1] == pytest.approx(1 / math.sqrt(2))
    assert got[2][1] == 0.0


def test_neighbors_duplicate_ranks_first():
    E = EmbeddingSet(["q", "a", "dup"], np.array([[1.0, 2.0], [2.0, 1.0], [1.0, 2.0]]))
    (tok, cos), = nearest_neighbors("q", E, k=1)
    assert tok == "dup" and cos == pytest.approx(1.0)


def test_neighbors_oov_word_mode():
    with pytest.raises(KeyError):
        nearest_neighbors("nope", _random_set())


# ----------------------------------------------------------------------- io

@pytest.mark.parametrize("mode", ["word", "subword"])
def test_vec_round_trip(tmp_path, mode):
    E = _random_set(mode)
    E.input = E.input.astype(np.float32)
    if E.buckets is not None:
        E.buckets = E.buckets.astype(np.float32)
    save_vec(E, tmp_path / "e.vec")
    back = load_vec(tmp_path / "e.vec")
    assert back.tokens == E.tokens and back.mode == mode
    assert np.max(np.abs(back.input - E.input)) <= 1e-5
    if mode == "subword":
        assert subword_sidecar(tmp_path / "e.vec").read_bytes()[:8] == b"HEMOSUBW"
        np.testing.assert_array_equal(back.buckets, E.buckets)
        np.testing.assert_allclose(fasttext_vector("w2", back), fasttext_vector("w2", E), atol=1e-6)


def test_vec_float64_exact(tmp_path):
    E = _random_set()
    save_vec(E, tmp_path / "e.vec")
    assert load_vec(tmp_path / "e.vec").input.tobytes() == E.input.tobytes()


def test_vec_hand_written_fixture(tmp_path):
    (tmp_path / "h.vec").write_text("2 3\npyar 0.5 -1 2.25\ndil 0 0.125 -3e-2\n", encoding="utf-8")
    E = load_vec(tmp_path / "h.vec")
    assert E.tokens == ["pyar", "dil"]
    np.testing.assert_array_equal(E.input, [[0.5, -1.0, 2.25], [0.0, 0.125, -0.03]])


def test_vec_dimension_mismatch(tmp_path):
    row = " ".join(["0.1"] * 299)
    (tmp_path / "bad.vec").write_text(f"1 300\nw {row}\n", encoding="utf-8")
    with pytest.raises(ValueError, match="expected 300"):
        load_vec(tmp_path / "bad.vec")


def test_vec_row_count_mismatch(tmp_path):
    (tmp_path / "bad.vec").write_text("3 1\na 1\nb 2\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_vec(tmp_path / "bad.vec")


def test_config_validation():
    with pytest.raises(ValueError):
        SgnsConfig(window=0)
    with pytest.raises(ValueError):
        SgnsConfig(negatives=0)
    with pytest.raises(ValueError):
        SgnsConfig(mode="glove")
    assert SgnsConfig().dim == 300 and SgnsConfig().window == 10
