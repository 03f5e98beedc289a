from __future__ import annotations

import numpy as np
import pytest

from hinglish_emo.corpus import resource_path
from hinglish_emo.models import ModelConfig

DESK_TWEETS = resource_path("desk/tweets.jsonl")
DESK_ENGLISH = resource_path("desk/english.jsonl")


def tiny_config(arch: str, vocab_size: int = 12, **kw) -> ModelConfig:
    """Small double-precision model for gradient and behaviour tests."""
    base = dict(arch=arch, vocab_size=vocab_size, embed_dim=5, max_len=6, kernel_sizes=(2, 3),
                n_kernels=4, cnn_hidden=(6, 5), lstm_units=4, rnn_hidden=5, attn_dim=3,
                dtype="float64")
    base.update(kw)
    return ModelConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def two_topic_corpus(n_tokens: int = 200_000, n_words: int = 50, sent_len: int = 12, seed: int = 0):
    """Sentences drawn entirely from one of two disjoint word sets."""
    r = np.random.default_rng(seed)
    A = [f"a{i}" for i in range(n_words)]
    B = [f"b{i}" for i in range(n_words)]
    sents = []
    n = 0
    while n < n_tokens:
        words = A if r.random() < 0.5 else B
        sents.append(" ".join(r.choice(words, sent_len)))
        n += sent_len
    return sents, A, B


def topic_gap(W: np.ndarray, index: dict[str, int], A, B) -> tuple[float, float]:
    """Mean within-topic (off-diagonal) and cross-topic cosine."""
    W = W / np.linalg.norm(W, axis=1, keepdims=True)
    ia, ib = [index[w] for w in A], [index[w] for w in B]

    def off_diag_mean(idx):
        S = W[idx] @ W[idx].T
        n = len(idx)
        return (S.sum() - np.trace(S)) / (n * n - n)

    within = (off_diag_mean(ia) + off_diag_mean(ib)) / 2
    cross = float(np.mean(W[ia] @ W[ib].T))
    return float(within), cross


def pyar_corpus(seed: int = 0, n_sents: int = 3000):
    """Love-topic sentences containing "pyar" against an unrelated topic;
    the spelling variant "pyaar" never occurs."""
    r = np.random.default_rng(seed)
    love = "pyar dil mohabbat ishq jaan sanam".split()
    other = "cricket match score team jeet wicket ball over".split()
    sents = []
    for _ in range(n_sents):
        if r.random() < 0.5:
            words = list(r.choice(love, 7)) + ["pyar"]
        else:
            words = list(r.choice(other, 8))
        r.shuffle(words)
        sents.append(" ".join(words))
    return sents


def kink_margin(fn) -> float:
    """Run ``fn()`` and return the smallest distance from any relu input to 0
    and from any max-pool winner to its runner-up. Finite differences are
    only meaningful when this exceeds the step size."""
    from hinglish_emo.numerics import ops

    seen = [np.inf]
    relu, pool = ops.relu, ops.global_max_pool

    def rec_relu(a):
        x = ops.as_tensor(a).data
        if x.size:
            seen.append(float(np.abs(x).min()))
        return relu(a)

    def rec_pool(x, mask=None):
        d = ops.as_tensor(x).data
        if mask is not None:
            d = np.where(np.asarray(mask, bool)[..., None], d, ops.NEG_SENTINEL)
        if d.shape[-2] > 1:
            top2 = np.sort(d, axis=-2)[..., -2:, :]
            gap = top2[..., 1, :] - top2[..., 0, :]
            # a tie among relu-clamped zeros stays tied under any small perturbation
            valid = (top2[..., 0, :] > ops.NEG_SENTINEL / 2) & (top2[..., 1, :] != 0.0)
            if valid.any():
                seen.append(float(gap[valid].min()))
        return pool(x, mask)

    ops.relu, ops.global_max_pool = rec_relu, rec_pool
    try:
        fn()
    finally:
        ops.relu, ops.global_max_pool = relu, pool
    return min(seen)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
