from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hinglish_emo.vocab import (
    PAD,
    UNK,
    Vocab,
    build_negative_table,
    build_vocab,
    encode,
    encode_batch,
    encode_sequence,
)


def test_ids_by_count_then_lexicographic():
    v = build_vocab("b a c a b a d".split(), min_count=1)
    assert v.tokens == ("<pad>", "<unk>", "a", "b", "c", "d")
    assert v.counts.tolist() == [0, 0, 3, 2, 1, 1]
    assert v.id("zzz") == UNK
    assert "a" in v and "<pad>" not in v and "zzz" not in v


def test_min_count_filters():
    v = build_vocab(["x"] * 10 + ["y"] * 9)
    assert v.tokens[2:] == ("x",)


def test_vocab_tsv_round_trip(tmp_path):
    v = build_vocab("pyar dil dil pyar pyar yaar".split(), min_count=1)
    v.save(tmp_path / "v.tsv")
    assert (tmp_path / "v.tsv").read_text().splitlines()[2] == "pyar\t2\t3"
    assert Vocab.load(tmp_path / "v.tsv") == v


def test_vocab_load_rejects_gaps(tmp_path):
    (tmp_path / "v.tsv").write_text("<pad>\t0\t0\n<unk>\t1\t0\nx\t3\t4\n")
    with pytest.raises(ValueError):
        Vocab.load(tmp_path / "v.tsv")


def test_vocab_requires_reserved_prefix():
    with pytest.raises(ValueError):
        Vocab(("a", "b"), np.array([1, 1]))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(list("abcdefghij")), min_size=1, max_size=60), st.randoms(use_true_random=False))
def test_vocab_permutation_invariant(tokens, r):
    shuffled = tokens[:]
    r.shuffle(shuffled)
    assert build_vocab(tokens, min_count=1) == build_vocab(shuffled, min_count=1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(list("abcdefghij")), max_size=60), st.integers(1, 4))
def test_vocab_ordering_invariant(tokens, k):
    v = build_vocab(tokens, min_count=k)
    real = list(zip(v.counts[2:].tolist(), v.tokens[2:]))
    assert real == sorted(real, key=lambda p: (-p[0], p[1]))
    assert all(c >= k for c, _ in real)


def test_negative_table_distribution():
    v = build_vocab(["a"] * 100 + ["b"] * 30 + ["c"] * 5 + ["d"], min_count=1)
    t = build_negative_table(v)
    w = np.array([100, 30, 5, 1], dtype=float) ** 0.75
    expected = w / w.sum()
    np.testing.assert_allclose(t.probs[2:], expected, rtol=1e-12)
    draws = t.sample(np.random.default_rng(0), 1_000_000)
    assert draws.min() >= 2
    freq = np.bincount(draws, minlength=len(v))[2:] / draws.size
    np.testing.assert_allclose(freq, expected, rtol=0, atol=0.01)
    assert np.abs(freq - expected).max() < 1e-3  # comfortably inside the bound


def test_negative_table_alpha_one_is_unigram():
    v = build_vocab(["a"] * 3 + ["b"], min_count=1)
    np.testing.assert_allclose(build_negative_table(v, alpha=1.0).probs[2:], [0.75, 0.25])


def test_negative_table_empty_vocab():
    with pytest.raises(ValueError):
        build_negative_table(build_vocab([], min_count=1))


def test_encode_pads_truncates_and_unknowns():
    v = build_vocab("a b c".split(), min_count=1)
    np.testing.assert_array_equal(encode("a zz c", v, 5), [2, UNK, 4, PAD, PAD])
    np.testing.assert_array_equal(encode("a b c a", v, 2), [2, 3])
    assert encode_batch([], v, 3).shape == (0, 3)
    assert encode_batch(["a", "b c"], v, 3).tolist() == [[2, 0, 0], [3, 4, 0]]
    np.testing.assert_array_equal(encode_sequence("a zz c", v), [2, 4])
    with pytest.raises(ValueError):
        encode("a", v, 0)
