"""Skip-gram negative-sampling embeddings, word-level and subword.

Rows of an ``EmbeddingSet`` follow ``tokens``; when trained from a ``Vocab``
row ``r`` holds vocab id ``r + 2`` (the padding and unknown ids carry no
vector). In subword mode a word vector is the mean of its own row and the
hashed buckets of its character n-grams.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from .vocab import N_RESERVED, NegativeTable, Vocab

FNV_OFFSET = 0x811C9DC5
FNV_PRIME = 0x01000193
SUBWORD_MAGIC = b"HEMOSUBW"
SUBWORD_VERSION = 1
CORPUS_VARIANTS = ("hinglish", "hinglish+english")


@dataclass
class SgnsConfig:
    dim: int = 300
    window: int = 10
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    lr_floor: float = 1e-4
    alpha: float = 0.75
    sample: float = 0.0  # frequent-word subsampling threshold, 0 disables
    seed: int = 1
    mode: str = "word"
    nmin: int = 3
    nmax: int = 6
    buckets: int = 200_000
    dtype: str = "float32"

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.mode not in ("word", "subword"):
            raise ValueError(f"mode must be 'word' or 'subword', got {self.mode!r}")
        if not 1 <= self.nmin <= self.nmax:
            raise ValueError("need 1 <= nmin <= nmax")
        if self.mode == "subword" and self.buckets < 1:
            raise ValueError("subword mode needs at least one bucket")


@dataclass
class EmbeddingSet:
    tokens: list[str]
    input: np.ndarray
    output: np.ndarray | None = None
    buckets: np.ndarray | None = None
    mode: str = "word"
    nmin: int = 3
    nmax: int = 6
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if self.input.shape[0] != len(self.tokens):
            raise ValueError("input matrix rows do not match token count")
        if self.mode == "subword" and (self.buckets is None or self.buckets.shape[0] < 1):
            raise ValueError("subword mode requires a bucket matrix")

    @property
    def dim(self) -> int:
        return self.input.shape[1]

    def copy(self) -> "EmbeddingSet":
        return EmbeddingSet(list(self.tokens), self.input.copy(),
                            None if self.output is None else self.output.copy(),
                            None if self.buckets is None else self.buckets.copy(),
                            self.mode, self.nmin, self.nmax)


# ------------------------------------------------------------------- subwords

def fnv1a(s: str) -> int:
    h = FNV_OFFSET
    for byte in s.encode("utf-8"):
        h ^= byte
        h = (h * FNV_PRIME) & 0xFFFFFFFF
    return h


def ngrams(word: str, nmin: int = 3, nmax: int = 6) -> list[str]:
    """Character n-grams of ``<word>``: every substring of length nmin..nmax
    other than the whole bracketed word (by start, then length), followed by
    the whole bracketed word."""
    if not word:
        raise ValueError("cannot take n-grams of an empty word")
    if not 1 <= nmin <= nmax:
        raise ValueError("need 1 <= nmin <= nmax")
    w = f"<{word}>"
    out = []
    for start in range(len(w)):
        for n in range(nmin, nmax + 1):
            if start + n > len(w):
                break
            if start == 0 and n == len(w):
                continue
            out.append(w[start:start + n])
    out.append(w)
    return out


def bucket_ids(word: str, n_buckets: int, nmin: int, nmax: int) -> np.ndarray:
    return np.array([fnv1a(g) % n_buckets for g in ngrams(word, nmin, nmax)], dtype=np.int64)


def _subword_csr(tokens: Sequence[str], n_buckets: int, nmin: int, nmax: int):
    ptr = np.zeros(len(tokens) + 1, dtype=np.int64)
    ids = [bucket_ids(t, n_buckets, nmin, nmax) for t in tokens]
    ptr[1:] = np.cumsum([len(x) for x in ids])
    flat = np.concatenate(ids) if ids else np.zeros(0, dtype=np.int64)
    return ptr, flat


def fasttext_vector(word: str, E: EmbeddingSet) -> np.ndarray:
    """Mean of the word's own row (when known) and its n-gram bucket rows."""
    if E.mode != "subword":
        raise ValueError("fasttext_vector needs a subword-mode EmbeddingSet")
    if not word:
        raise ValueError("empty word")
    b = bucket_ids(word, E.buckets.shape[0], E.nmin, E.nmax)
    total = E.buckets[b].astype(np.float64).sum(axis=0)
    n = len(b)
    row = E.index.get(word)
    if row is not None:
        total += E.input[row]
        n += 1
    return total / n


def word_vectors(E: EmbeddingSet) -> np.ndarray:
    """Effective vector for every row: the input matrix itself in word mode,
    the composed subword mean in subword mode."""
    if E.mode == "word":
        return E.input.astype(np.float64)
    ptr, flat = _subword_csr(E.tokens, E.buckets.shape[0], E.nmin, E.nmax)
    out = E.input.astype(np.float64).copy()
    for r in range(len(E.tokens)):
        out[r] += E.buckets[flat[ptr[r]:ptr[r + 1]]].sum(axis=0)
        out[r] /= 1 + ptr[r + 1] - ptr[r]
    return out


def vector(word: str, E: EmbeddingSet) -> np.ndarray:
    if E.mode == "subword":
        return fasttext_vector(word, E)
    if word not in E.index:
        raise KeyError(f"{word!r} is not in the embedding vocabulary")
    return E.input[E.index[word]].astype(np.float64)


# ----------------------------------------------------------------- objective

def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sgns_loss_grads(v: np.ndarray, u_ctx: np.ndarray, u_neg: np.ndarray):
    """Loss ``-log s(u_c.v) - sum_n log s(-u_n.v)`` and its gradients with
    respect to ``v``, ``u_ctx`` and each row of ``u_neg``."""
    u_neg = np.asarray(u_neg).reshape(-1, v.shape[0])
    pos = float(u_ctx @ v)
    neg = u_neg @ v
    loss = -_log_sigmoid(pos) - float(np.sum(_log_sigmoid(-neg)))
    gpos = _sigmoid(pos) - 1.0
    gneg = _sigmoid(neg)
    grad_v = gpos * u_ctx + gneg @ u_neg
    grad_ctx = gpos * v
    grad_neg = gneg[:, None] * v[None, :]
    return loss, grad_v, grad_ctx, grad_neg


def _center_rows(center: int, E: EmbeddingSet):
    if E.mode == "subword":
        b = bucket_ids(E.tokens[center], E.buckets.shape[0], E.nmin, E.nmax)
        return b, 1 + len(b)
    return None, 1


def center_vector(center: int, E: EmbeddingSet) -> np.ndarray:
    b, n = _center_rows(center, E)
    v = E.input[center].astype(np.float64)
    if b is not None:
        v = (v + E.buckets[b].sum(axis=0)) / n
    return v


def sgns_step(center: int, context: int, negatives: Sequence[int], E: EmbeddingSet, lr: float) -> float:
    """One SGD step on a (center, context, negatives) triple of row ids.

    Returns the loss evaluated before the update. In subword mode the
    center gradient is shared equally by the word row and its n-gram
    buckets, since the center vector is their mean.
    """
    if E.output is None:
        raise ValueError("EmbeddingSet has no output matrix to train")
    negatives = np.asarray(negatives, dtype=np.int64)
    if np.any(negatives == center) or np.any(negatives == context):
        raise ValueError("negatives must exclude the center and context ids")
    v = center_vector(center, E)
    u_ctx = E.output[context].astype(np.float64)
    u_neg = E.output[negatives].astype(np.float64)
    loss, gv, gc, gn = sgns_loss_grads(v, u_ctx, u_neg)
    if not math.isfinite(loss):
        raise FloatingPointError(f"non-finite SGNS loss for center={center} context={context}")
    E.output[context] -= lr * gc
    np.subtract.at(E.output, negatives, lr * gn)
    b, n = _center_rows(center, E)
    E.input[center] -= lr * gv / n
    if b is not None:
        np.subtract.at(E.buckets, b, np.broadcast_to(lr * gv / n, (len(b), gv.shape[0])))
    return loss


# ------------------------------------------------------------------ training

@numba.njit(cache=True)
def _seed_numba(seed):
    np.random.seed(seed)


@numba.njit(cache=True)
def _softplus(z):
    if z > 0:
        return z + math.log1p(math.exp(-z))
    return math.log1p(math.exp(z))


@numba.njit(cache=True)
def _pair_update(w_in, w_out, buckets, sub_idx, s0, s1, center, ctx, neg, k, lr, v, gv, gneg):
    """SGD step for one (center, context, neg[:k]) triple; returns the loss
    before the update. Mirrors ``sgns_step``."""
    dim = w_in.shape[1]
    n_const = 1 + s1 - s0
    for d in range(dim):
        v[d] = w_in[center, d]
    for q in range(s0, s1):
        bk = sub_idx[q]
        for d in range(dim):
            v[d] += buckets[bk, d]
    if n_const > 1:
        for d in range(dim):
            v[d] /= n_const
    dot = 0.0
    for d in range(dim):
        dot += w_out[ctx, d] * v[d]
    loss = _softplus(-dot)
    gpos = 1.0 / (1.0 + math.exp(-dot)) - 1.0
    for d in range(dim):
        gv[d] = gpos * w_out[ctx, d]
    for t in range(k):
        r = neg[t]
        nd = 0.0
        for d in range(dim):
            nd += w_out[r, d] * v[d]
        loss += _softplus(nd)
        gneg[t] = 1.0 / (1.0 + math.exp(-nd))
        for d in range(dim):
            gv[d] += gneg[t] * w_out[r, d]
    if not math.isfinite(loss):
        return loss
    for d in range(dim):
        w_out[ctx, d] -= lr * gpos * v[d]
    for t in range(k):
        r = neg[t]
        for d in range(dim):
            w_out[r, d] -= lr * gneg[t] * v[d]
    scale = lr / n_const
    for d in range(dim):
        w_in[center, d] -= scale * gv[d]
    for q in range(s0, s1):
        bk = sub_idx[q]
        for d in range(dim):
            buckets[bk, d] -= scale * gv[d]
    return loss


@numba.njit(cache=True)
def _train_epochs(w_in, w_out, buckets, sub_ptr, sub_idx, use_sub, tokens, sent_ptr,
                  cdf, keep_prob, window, n_neg, epochs, lr0, lr_floor):
    """Run ``epochs`` passes; returns (mean pair loss of the last epoch, ok)."""
    dim = w_in.shape[1]
    total = tokens.shape[0]
    planned = max(1, epochs * total)
    processed = 0
    neg = np.empty(n_neg, dtype=np.int64)
    gneg = np.empty(n_neg, dtype=np.float64)
    sentence = np.empty(total, dtype=np.int64)
    v = np.empty(dim, dtype=np.float64)
    gv = np.empty(dim, dtype=np.float64)
    last_loss = 0.0
    for ep in range(epochs):
        loss_sum = 0.0
        pairs = 0
        for s in range(sent_ptr.shape[0] - 1):
            m = 0
            for p in range(sent_ptr[s], sent_ptr[s + 1]):
                w = tokens[p]
                if keep_prob[w] < 1.0 and np.random.random() > keep_prob[w]:
                    continue
                sentence[m] = w
                m += 1
            for i in range(m):
                lr = lr0 - (lr0 - lr_floor) * (processed / planned)
                if lr < lr_floor:
                    lr = lr_floor
                processed += 1
                center = sentence[i]
                b = np.random.randint(1, window + 1)
                s0, s1 = 0, 0
                if use_sub:
                    s0, s1 = sub_ptr[center], sub_ptr[center + 1]
                for j in range(max(0, i - b), min(m, i + b + 1)):
                    if j == i:
                        continue
                    ctx = sentence[j]
                    k = 0
                    for _ in range(n_neg):
                        r = np.searchsorted(cdf, np.random.random(), side="right")
                        if r != center and r != ctx:
                            neg[k] = r
                            k += 1
                    loss = _pair_update(w_in, w_out, buckets, sub_idx, s0, s1, center, ctx,
                                        neg, k, lr, v, gv, gneg)
                    if not math.isfinite(loss):
                        return loss, False
                    loss_sum += loss
                    pairs += 1
        last_loss = loss_sum / max(1, pairs)
    return last_loss, True


def init_embeddings(tokens: Sequence[str], cfg: SgnsConfig) -> EmbeddingSet:
    rng = np.random.default_rng(cfg.seed)
    dtype = np.dtype(cfg.dtype)
    V, d = len(tokens), cfg.dim
    w_in = ((rng.random((V, d)) - 0.5) / d).astype(dtype)
    w_out = np.zeros((V, d), dtype=dtype)
    buckets = None
    if cfg.mode == "subword":
        buckets = ((rng.random((cfg.buckets, d)) - 0.5) / d).astype(dtype)
    return EmbeddingSet(list(tokens), w_in, w_out, buckets, cfg.mode, cfg.nmin, cfg.nmax)


def _keep_probs(counts: np.ndarray, sample: float) -> np.ndarray:
    keep = np.ones(len(counts), dtype=np.float64)
    if sample > 0:
        total = counts.sum()
        thr = sample * total
        nz = counts > 0
        f = counts[nz].astype(np.float64)
        keep[nz] = np.minimum(1.0, (np.sqrt(f / thr) + 1.0) * thr / f)
    return keep


def train_sgns(corpus: Sequence[np.ndarray], vocab: Vocab, table: NegativeTable,
               cfg: SgnsConfig) -> EmbeddingSet:
    """Train on encoded sentences (vocab ids; reserved ids are skipped).

    The effective window per center is drawn uniformly from 1..window and
    the learning rate decays linearly from ``lr`` to ``lr_floor``. Fixed
    seed gives bit-identical output.
    """
    seqs = [np.asarray(s, dtype=np.int64) for s in corpus]
    seqs = [s[s >= N_RESERVED] - N_RESERVED for s in seqs]
    seqs = [s for s in seqs if len(s)]
    if not seqs:
        raise ValueError("cannot train embeddings on an empty corpus")
    tokens = list(vocab.tokens[N_RESERVED:])
    E = init_embeddings(tokens, cfg)
    if cfg.epochs == 0:
        return E
    flat = np.concatenate(seqs)
    sent_ptr = np.zeros(len(seqs) + 1, dtype=np.int64)
    sent_ptr[1:] = np.cumsum([len(s) for s in seqs])
    cdf = np.ascontiguousarray(table.cdf[N_RESERVED:])
    keep = _keep_probs(vocab.counts[N_RESERVED:], cfg.sample)
    if E.mode == "subword":
        sub_ptr, sub_idx = _subword_csr(tokens, E.buckets.shape[0], E.nmin, E.nmax)
        buckets = E.buckets
    else:
        sub_ptr = np.zeros(len(tokens) + 1, dtype=np.int64)
        sub_idx = np.zeros(0, dtype=np.int64)
        buckets = np.zeros((1, cfg.dim), dtype=E.input.dtype)
    _seed_numba(cfg.seed)
    loss, ok = _train_epochs(E.input, E.output, buckets, sub_ptr, sub_idx, E.mode == "subword",
                             flat, sent_ptr, cdf, keep, cfg.window, cfg.negatives, cfg.epochs,
                             cfg.lr, cfg.lr_floor)
    if not ok:
        raise FloatingPointError(f"SGNS training diverged (loss={loss})")
    return E


def embedding_corpus(hinglish: Sequence[str], english: Sequence[str] = (),
                     variant: str = "hinglish") -> list[str]:
    """Texts for embedding training. The mixed variant is the Hinglish
    corpus plus a non-empty English corpus."""
    if variant == "hinglish":
        return list(hinglish)
    if variant == "hinglish+english":
        if not english:
            raise ValueError("the hinglish+english variant needs a non-empty English corpus")
        return list(hinglish) + list(english)
    raise ValueError(f"unknown corpus variant {variant!r}; expected one of {CORPUS_VARIANTS}")


# --------------------------------------------------------------- diagnostics

def _cosines(M: np.ndarray, q: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(M, axis=1) * np.linalg.norm(q)
    dots = M @ q
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(norms > 0, dots / np.where(norms > 0, norms, 1.0), 0.0)
    return cos


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def nearest_neighbors(query: str, E: EmbeddingSet, k: int = 10) -> list[tuple[str, float]]:
    if k < 1:
        raise ValueError("k must be >= 1")
    q = vector(query, E)
    cos = _cosines(word_vectors(E), q)
    rows = [r for r in range(len(E.tokens)) if E.tokens[r] != query]
    rows.sort(key=lambda r: (-cos[r], r))
    return [(E.tokens[r], float(cos[r])) for r in rows[:k]]


# ----------------------------------------------------------------------- io

def _fmt(dtype) -> str:
    return ".9g" if np.dtype(dtype) == np.float32 else ".17g"


def save_vec(E: EmbeddingSet, path: str | Path) -> Path:
    """Write ``V d`` then ``token v1 .. vd`` rows; subword buckets go to the
    ``<path>.subword`` sidecar."""
    path = Path(path)
    fmt = _fmt(E.input.dtype)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(E.tokens)} {E.dim}\n")
        for tok, row in zip(E.tokens, E.input):
            fh.write(tok + " " + " ".join(format(float(x), fmt) for x in row) + "\n")
    side = subword_sidecar(path)
    if E.mode == "subword":
        _save_buckets(side, E)
    elif side.exists():
        side.unlink()
    return path


def subword_sidecar(path: str | Path) -> Path:
    return Path(str(path) + ".subword")


_DT_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}


def _save_buckets(path: Path, E: EmbeddingSet) -> None:
    b = E.buckets
    dt = b.dtype.newbyteorder("<")
    header = SUBWORD_MAGIC + struct.pack("<II", SUBWORD_VERSION, 0)
    meta = struct.pack("<QIIIB", b.shape[0], b.shape[1], E.nmin, E.nmax, _DT_CODES[dt])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(meta)
        fh.write(np.ascontiguousarray(b, dtype=dt).tobytes())


def _load_buckets(path: Path):
    raw = path.read_bytes()
    if raw[:8] != SUBWORD_MAGIC:
        raise ValueError(f"{path}: bad subword sidecar magic")
    version, _ = struct.unpack_from("<II", raw, 8)
    if version != SUBWORD_VERSION:
        raise ValueError(f"{path}: unsupported sidecar version {version}")
    B, d, nmin, nmax, code = struct.unpack_from("<QIIIB", raw, 16)
    dt = {v: k for k, v in _DT_CODES.items()}[code]
    off = 16 + struct.calcsize("<QIIIB")
    data = np.frombuffer(raw, dtype=dt, count=B * d, offset=off).reshape(B, d).copy()
    return data, nmin, nmax


def load_vec(path: str | Path, dtype: str = "float64") -> EmbeddingSet:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: header must be 'V d'")
        V, d = int(header[0]), int(header[1])
        tokens, rows = [], []
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != d + 1:
                raise ValueError(f"{path}:{lineno}: expected {d} values, found {len(parts) - 1}")
            tokens.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    if len(tokens) != V:
        raise ValueError(f"{path}: header promises {V} rows, found {len(tokens)}")
    mat = np.asarray(rows, dtype=dtype).reshape(V, d)
    side = subword_sidecar(path)
    if side.exists():
        buckets, nmin, nmax = _load_buckets(side)
        if buckets.shape[1] != d:
            raise ValueError(f"{side}: bucket dimension {buckets.shape[1]} != {d}")
        return EmbeddingSet(tokens, mat, None, buckets.astype(dtype), "subword", nmin, nmax)
    return EmbeddingSet(tokens, mat)
