"""CNN, LSTM, BiLSTM and attention-BiLSTM emotion classifiers.

All forwards take right-padded id arrays of shape (max_len,) or
(batch, max_len) and return six scores per example.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

from . import corpus as corpus_mod
from .corpus import Emotion
from .numerics import ops
from .numerics.checkpoint import atomic_write_bytes, load_checkpoint, save_checkpoint
from .numerics.tensor import Tensor, parameter
from .vocab import PAD, Vocab, encode

ARCHITECTURES = ("cnn", "lstm", "bilstm", "attn_bilstm")
N_CLASSES = len(Emotion)


class EmptyInput(ValueError):
    pass


@dataclass
class ModelConfig:
    arch: str = "attn_bilstm"
    vocab_size: int = 2
    embed_dim: int = 300
    max_len: int = 64
    kernel_sizes: tuple[int, ...] = (3, 6, 9, 12)
    n_kernels: int = 200
    cnn_dropout: float = 0.5
    cnn_hidden: tuple[int, ...] = (256, 64)
    lstm_units: int = 150
    input_dropout: float = 0.2
    recurrent_dropout: float = 0.2
    rnn_hidden: int = 64
    attn_dim: int = 64
    output: str = "sigmoid"
    freeze_embeddings: bool = False
    dtype: str = "float32"

    def __post_init__(self):
        self.kernel_sizes = tuple(int(k) for k in self.kernel_sizes)
        self.cnn_hidden = tuple(int(h) for h in self.cnn_hidden)
        if self.arch not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.arch!r}; expected one of {ARCHITECTURES}")
        if self.output not in ("sigmoid", "softmax"):
            raise ValueError(f"output must be 'sigmoid' or 'softmax', got {self.output!r}")
        if self.arch == "cnn" and self.max_len < max(self.kernel_sizes):
            raise ValueError(f"max_len {self.max_len} is shorter than the largest kernel {max(self.kernel_sizes)}")
        for p in (self.cnn_dropout, self.input_dropout, self.recurrent_dropout):
            if not 0.0 <= p < 1.0:
                raise ValueError(f"dropout rate must lie in [0, 1), got {p}")


@dataclass
class ModelParams:
    config: ModelConfig
    params: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def arch(self) -> str:
        return self.config.arch

    def trainable_names(self) -> list[str]:
        return [n for n in self.params if not (n == "embedding" and self.config.freeze_embeddings)]

    def leaves(self, names=None) -> dict[str, Tensor]:
        names = self.trainable_names() if names is None else names
        return {n: parameter(self.params[n], name=n) for n in names}

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {k: v.copy() for k, v in self.params.items()})


# ------------------------------------------------------------ initialisation

def _glorot(rng, fan_in, fan_out, shape, dtype):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, shape).astype(dtype)


def _orthogonal(rng, rows, cols, dtype):
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    q = q if rows >= cols else q.T
    return np.ascontiguousarray(q[:rows, :cols], dtype=dtype)


def _dense_stack(rng, sizes, prefix, dtype, params):
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:]), start=1):
        params[f"{prefix}{i}.weight"] = _glorot(rng, a, b, (a, b), dtype)
        params[f"{prefix}{i}.bias"] = np.zeros(b, dtype=dtype)


def _lstm_params(rng, d, H, prefix, dtype, params):
    params[f"{prefix}.W"] = _glorot(rng, d, 4 * H, (d, 4 * H), dtype)
    params[f"{prefix}.U"] = _orthogonal(rng, H, 4 * H, dtype)
    b = np.zeros(4 * H, dtype=dtype)
    b[H:2 * H] = 1.0  # forget gate
    params[f"{prefix}.b"] = b


def init_model(config: ModelConfig, embedding_matrix: np.ndarray | None = None, seed: int = 0) -> ModelParams:
    """Fresh parameters. ``embedding_matrix`` (vocab_size x embed_dim) seeds
    the embedding layer; the padding row is always zero."""
    dtype = np.dtype(config.dtype)
    rng = np.random.default_rng(seed)
    d = config.embed_dim
    params: dict[str, np.ndarray] = {}
    if embedding_matrix is not None:
        if embedding_matrix.shape != (config.vocab_size, d):
            raise ValueError(f"embedding matrix shape {embedding_matrix.shape} != ({config.vocab_size}, {d})")
        emb = np.array(embedding_matrix, dtype=dtype)
    else:
        emb = rng.uniform(-0.05, 0.05, (config.vocab_size, d)).astype(dtype)
    emb[PAD] = 0.0
    params["embedding"] = emb
    H = config.lstm_units
    if config.arch == "cnn":
        F = config.n_kernels
        for k in config.kernel_sizes:
            params[f"conv{k}.weight"] = _glorot(rng, k * d, k * F, (F, k, d), dtype)
            params[f"conv{k}.bias"] = np.zeros(F, dtype=dtype)
        sizes = [F * len(config.kernel_sizes), *config.cnn_hidden, N_CLASSES]
    else:
        _lstm_params(rng, d, H, "lstm_fwd", dtype, params)
        width = H
        if config.arch in ("bilstm", "attn_bilstm"):
            _lstm_params(rng, d, H, "lstm_bwd", dtype, params)
            width = 2 * H
        if config.arch == "attn_bilstm":
            a = config.attn_dim
            params["attn.W"] = _glorot(rng, 2 * H, a, (2 * H, a), dtype)
            params["attn.v"] = _glorot(rng, a, 1, (a,), dtype)
            width = 4 * H
        sizes = [width, config.rnn_hidden, N_CLASSES]
    _dense_stack(rng, sizes, "dense", dtype, params)
    return ModelParams(config, params)


# ------------------------------------------------------------------ forwards

def _inputs(ids, P: ModelParams, leaves):
    ids = np.asarray(ids, dtype=np.int64)
    single = ids.ndim == 1
    if single:
        ids = ids[None]
    leaves = leaves or {}

    def get(name):
        return leaves[name] if name in leaves else Tensor(P.params[name])

    return ids, single, get


def _dense_head(h, get, n_layers, output):
    for i in range(1, n_layers + 1):
        h = ops.dense(h, get(f"dense{i}.weight"), get(f"dense{i}.bias"))
        if i < n_layers:
            h = ops.relu(h)
    return ops.sigmoid(h) if output == "sigmoid" else ops.softmax(h, axis=-1)


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def lengths_of(ids: np.ndarray) -> np.ndarray:
    return (np.asarray(ids) != PAD).sum(axis=-1)


def pool_mask(lengths: np.ndarray, T: int, k: int) -> np.ndarray:
    """Valid conv positions: windows fully inside the content, plus the first."""
    t = np.arange(T)[None, :]
    return (t + k <= lengths[:, None]) | (t == 0)


def cnn_forward(ids, P: ModelParams, training: bool = False, rng=None, leaves=None) -> Tensor:
    cfg = P.config
    ids, single, get = _inputs(ids, P, leaves)
    if ids.shape[1] < max(cfg.kernel_sizes):
        raise ValueError(f"sequence length {ids.shape[1]} shorter than the largest kernel")
    rng = _rng(rng)
    lengths = lengths_of(ids)
    x = ops.embedding(get("embedding"), ids)
    pooled = []
    for k in cfg.kernel_sizes:
        c = ops.relu(ops.conv1d_valid(x, get(f"conv{k}.weight"), get(f"conv{k}.bias")))
        pooled.append(ops.global_max_pool(c, pool_mask(lengths, c.shape[1], k)))
    h = ops.concat(pooled, axis=-1)
    h = ops.dropout(h, cfg.cnn_dropout, training, rng)
    out = _dense_head(h, get, len(cfg.cnn_hidden) + 1, cfg.output)
    return out[0] if single else out


def _run_lstm(xw_steps, mask, prefix, get, H, reverse, rdrop, dtype):
    """Returns per-step hidden states in time order and the final state.

    Steps where ``mask`` is 0 carry the previous state through unchanged.
    """
    B = xw_steps[0].shape[0]
    U = get(f"{prefix}.U")
    h = Tensor(np.zeros((B, H), dtype=dtype))
    c = Tensor(np.zeros((B, H), dtype=dtype))
    T = len(xw_steps)
    order = range(T - 1, -1, -1) if reverse else range(T)
    states: list = [None] * T
    for t in order:
        h_in = h if rdrop is None else ops.mul(h, rdrop)
        z = ops.add(xw_steps[t], ops.matmul(h_in, U))
        h_new, c_new = ops.lstm_gates(z, c)
        m = mask[:, t:t + 1]
        if m.all():
            h, c = h_new, c_new
        else:
            h, c = ops.where_mask(m, h_new, h), ops.where_mask(m, c_new, c)
        states[t] = h
    return states, h


def _recurrent_encode(ids, P: ModelParams, training, rng, leaves):
    cfg = P.config
    ids, single, get = _inputs(ids, P, leaves)
    rng = _rng(rng)
    dtype = np.dtype(cfg.dtype)
    lengths = lengths_of(ids)
    T = max(1, int(lengths.max()))  # trailing all-pad columns never change the masked state
    ids = ids[:, :T]
    mask = (np.arange(T)[None, :] < lengths[:, None]).astype(dtype)
    H = cfg.lstm_units
    x = ops.embedding(get("embedding"), ids)
    x = ops.dropout(x, cfg.input_dropout, training, rng)
    directions = [("lstm_fwd", False)]
    if cfg.arch in ("bilstm", "attn_bilstm"):
        directions.append(("lstm_bwd", True))
    results = []
    B = ids.shape[0]
    for prefix, reverse in directions:
        xw = ops.add(ops.matmul(x, get(f"{prefix}.W")), get(f"{prefix}.b"))
        rdrop = None
        if training and cfg.recurrent_dropout > 0:
            rdrop = ops.dropout_mask((B, H), cfg.recurrent_dropout, rng, dtype)
        results.append(_run_lstm(ops.unstack(xw, axis=1), mask, prefix, get, H, reverse, rdrop, dtype))
    return results, lengths, T, single, get


def lstm_forward(ids, P: ModelParams, training: bool = False, rng=None, leaves=None) -> Tensor:
    (fwd,), _, _, single, get = _recurrent_encode(ids, P, training, rng, leaves)
    out = _dense_head(fwd[1], get, 2, P.config.output)
    return out[0] if single else out


def bilstm_forward(ids, P: ModelParams, training: bool = False, rng=None, leaves=None) -> Tensor:
    (fwd, bwd), _, _, single, get = _recurrent_encode(ids, P, training, rng, leaves)
    h = ops.concat([fwd[1], bwd[1]], axis=-1)
    out = _dense_head(h, get, 2, P.config.output)
    return out[0] if single else out


def attention_weights(states, W, v, mask=None) -> Tensor:
    """``alpha = softmax_t(v . tanh(states_t W))`` over (T, 2H) or (B, T, 2H)
    states; masked-out steps get zero weight."""
    scores = ops.matmul(ops.tanh(ops.matmul(states, W)), v)
    return ops.softmax(scores, axis=-1, mask=mask)


def attn_bilstm_forward(ids, P: ModelParams, training: bool = False, rng=None, leaves=None) -> Tensor:
    (fwd, bwd), lengths, T, single, get = _recurrent_encode(ids, P, training, rng, leaves)
    states = ops.stack([ops.concat([f, b], axis=-1) for f, b in zip(fwd[0], bwd[0])], axis=1)
    amask = np.arange(T)[None, :] < np.maximum(lengths, 1)[:, None]
    alpha = attention_weights(states, get("attn.W"), get("attn.v"), amask)
    context = ops.sum(ops.mul(ops.reshape(alpha, alpha.shape + (1,)), states), axis=1)
    h = ops.concat([context, fwd[1], bwd[1]], axis=-1)
    out = _dense_head(h, get, 2, P.config.output)
    return out[0] if single else out


FORWARDS: dict[str, Callable] = {
    "cnn": cnn_forward,
    "lstm": lstm_forward,
    "bilstm": bilstm_forward,
    "attn_bilstm": attn_bilstm_forward,
}


def forward(ids, P: ModelParams, training: bool = False, rng=None, leaves=None) -> Tensor:
    return FORWARDS[P.arch](ids, P, training, rng, leaves)


def predict_scores(ids, P: ModelParams, batch_size: int = 256) -> np.ndarray:
    ids = np.asarray(ids)
    if ids.ndim == 1:
        return forward(ids, P).data
    out = [forward(ids[i:i + batch_size], P).data for i in range(0, len(ids), batch_size)]
    return np.concatenate(out) if out else np.zeros((0, N_CLASSES))


# ----------------------------------------------------------------- inference

@dataclass
class PreprocessContext:
    vocab: Vocab
    keywords: frozenset[str] = frozenset()


def argmax_class(scores) -> Emotion:
    return Emotion(int(np.argmax(np.asarray(scores))))  # first maximum wins ties


def predict(text: str, P: ModelParams, ctx: PreprocessContext) -> tuple[Emotion, np.ndarray]:
    cleaned = corpus_mod.clean_text(text, ctx.keywords)
    if not cleaned:
        raise EmptyInput("text is empty after cleaning")
    ids = encode(cleaned, ctx.vocab, P.config.max_len)
    scores = forward(ids, P).data
    return argmax_class(scores), scores


# ----------------------------------------------------------------------- io

def _manifest_value(v) -> str:
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return str(v)


def save_model(P: ModelParams, path: str | Path, extra: dict[str, str] | None = None) -> Path:
    """Checkpoint tensors plus a ``<path>.manifest`` key = value sidecar."""
    path = Path(path)
    save_checkpoint(path, P.params)
    lines = [f"{k} = {_manifest_value(v)}" for k, v in asdict(P.config).items()]
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}")
    atomic_write_bytes(manifest_path(path), ("\n".join(lines) + "\n").encode("utf-8"))
    return path


def manifest_path(path: str | Path) -> Path:
    return Path(str(path) + ".manifest")


def read_manifest(path: str | Path) -> dict[str, str]:
    out = {}
    for line in manifest_path(path).read_text(encoding="utf-8").splitlines():
        if line.strip() and not line.startswith("#"):
            k, _, v = line.partition("=")
            out[k.strip()] = v.strip()
    return out


def load_model(path: str | Path) -> ModelParams:
    meta = read_manifest(path)
    kwargs = {}
    for f in fields(ModelConfig):
        if f.name not in meta:
            continue
        raw = meta[f.name]
        default = getattr(ModelConfig, f.name, None)
        if f.name in ("kernel_sizes", "cnn_hidden"):
            kwargs[f.name] = tuple(int(x) for x in raw.split(",") if x)
        elif isinstance(default, bool):
            kwargs[f.name] = raw == "True"
        elif isinstance(default, int):
            kwargs[f.name] = int(raw)
        elif isinstance(default, float):
            kwargs[f.name] = float(raw)
        else:
            kwargs[f.name] = raw
    return ModelParams(ModelConfig(**kwargs), load_checkpoint(path))
