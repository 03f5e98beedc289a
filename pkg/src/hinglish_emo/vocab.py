"""Token vocabulary, negative-sampling distribution and fixed-length encoding."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

PAD, UNK = 0, 1
PAD_TOKEN, UNK_TOKEN = "<pad>", "<unk>"
N_RESERVED = 2


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[str, ...]
    counts: np.ndarray
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.tokens[:N_RESERVED] != (PAD_TOKEN, UNK_TOKEN):
            raise ValueError("vocab must start with the reserved pad and unknown tokens")
        if len(self.tokens) != len(self.counts):
            raise ValueError("tokens and counts differ in length")
        index = {t: i for i, t in enumerate(self.tokens)}
        if len(index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocab")
        object.__setattr__(self, "index", index)
        self.counts.setflags(write=False)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return self.index.get(token, UNK) >= N_RESERVED

    def __eq__(self, other) -> bool:
        return (isinstance(other, Vocab) and self.tokens == other.tokens
                and np.array_equal(self.counts, other.counts))

    def id(self, token: str) -> int:
        return self.index.get(token, UNK)

    @property
    def n_real(self) -> int:
        return len(self.tokens) - N_RESERVED

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for i, (tok, c) in enumerate(zip(self.tokens, self.counts)):
                fh.write(f"{tok}\t{i}\t{int(c)}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        tokens, counts = [], []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected token<TAB>id<TAB>count")
            tok, i, c = parts
            if int(i) != len(tokens):
                raise ValueError(f"{path}:{lineno}: ids must be dense and sorted")
            tokens.append(tok)
            counts.append(int(c))
        return cls(tuple(tokens), np.asarray(counts, dtype=np.int64))


def build_vocab(tokens: Iterable[str], min_count: int = 10) -> Vocab:
    """Ids ordered by descending count, ties lexicographic; ids 0 and 1 are
    padding and unknown."""
    counts = Counter(tokens)
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    toks = (PAD_TOKEN, UNK_TOKEN, *kept)
    arr = np.array([0, 0] + [counts[t] for t in kept], dtype=np.int64)
    return Vocab(toks, arr)


@dataclass(frozen=True)
class NegativeTable:
    """Unigram^alpha distribution over vocab ids, sampled by inverse CDF."""

    probs: np.ndarray
    cdf: np.ndarray
    alpha: float

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return np.searchsorted(self.cdf, rng.random(size), side="right").astype(np.int64)


def build_negative_table(vocab: Vocab, alpha: float = 0.75) -> NegativeTable:
    if vocab.n_real == 0:
        raise ValueError("vocabulary has no real tokens to sample from")
    weights = vocab.counts.astype(np.float64) ** alpha
    weights[:N_RESERVED] = 0.0
    probs = weights / weights.sum()
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    probs.setflags(write=False)
    cdf.setflags(write=False)
    return NegativeTable(probs, cdf, alpha)


def encode(text: str, vocab: Vocab, max_len: int) -> np.ndarray:
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    ids = [vocab.id(t) for t in text.split()[:max_len]]
    out = np.zeros(max_len, dtype=np.int64)
    out[:len(ids)] = ids
    return out


def encode_batch(texts: Iterable[str], vocab: Vocab, max_len: int) -> np.ndarray:
    rows = [encode(t, vocab, max_len) for t in texts]
    if not rows:
        return np.zeros((0, max_len), dtype=np.int64)
    return np.stack(rows)


def encode_sequence(text: str, vocab: Vocab) -> np.ndarray:
    """Variable-length ids with out-of-vocabulary tokens removed."""
    ids = [vocab.index[t] for t in text.split() if t in vocab]
    return np.asarray(ids, dtype=np.int64)
