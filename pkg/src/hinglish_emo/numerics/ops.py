"""Differentiable primitives.

Every function takes tensors (or arrays, promoted to constants) and returns a
new ``Tensor`` wired into the graph.
"""
from __future__ import annotations

import numpy as np

from .tensor import Tensor, accumulate, as_tensor

NEG_SENTINEL = -1e30
CCE_EPS = 1e-7


def _wrap(data, parents, bw) -> Tensor:
    return Tensor(data, parents=parents, backward=bw)


# ----------------------------------------------------------------- arithmetic

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bw(g):
        accumulate(a, g)
        accumulate(b, g)

    return _wrap(a.data + b.data, (a, b), bw)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bw(g):
        accumulate(a, g)
        accumulate(b, -g)

    return _wrap(a.data - b.data, (a, b), bw)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bw(g):
        if a.requires_grad:
            accumulate(a, g * b.data)
        if b.requires_grad:
            accumulate(b, g * a.data)

    return _wrap(a.data * b.data, (a, b), bw)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bw(g):
        if a.requires_grad:
            accumulate(a, g / b.data)
        if b.requires_grad:
            accumulate(b, -g * a.data / (b.data * b.data))

    return _wrap(a.data / b.data, (a, b), bw)


def matmul(a, b) -> Tensor:
    """``a @ b`` for ``a`` of rank 1-3 and ``b`` of rank 1-2."""
    a, b = as_tensor(a), as_tensor(b)
    out = a.data @ b.data

    def bw(g):
        ad, bd = a.data, b.data
        if bd.ndim == 1:
            if a.requires_grad:
                accumulate(a, np.multiply.outer(g, bd))
            if b.requires_grad:
                accumulate(b, np.tensordot(g, ad, axes=(tuple(range(g.ndim)), tuple(range(g.ndim)))))
            return
        if ad.ndim == 1:
            if a.requires_grad:
                accumulate(a, bd @ g)
            if b.requires_grad:
                accumulate(b, np.outer(ad, g))
            return
        if a.requires_grad:
            accumulate(a, g @ bd.T)
        if b.requires_grad:
            a2 = ad.reshape(-1, ad.shape[-1])
            accumulate(b, a2.T @ g.reshape(-1, g.shape[-1]))

    return _wrap(out, (a, b), bw)


def sum(a, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        accumulate(a, np.broadcast_to(g, a.data.shape))

    return _wrap(out, (a,), bw)


def mean(a, axis=None) -> Tensor:
    a = as_tensor(a)
    n = a.data.size if axis is None else a.data.shape[axis]
    return mul(sum(a, axis=axis), 1.0 / n)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)

    def bw(g):
        accumulate(a, g.reshape(a.data.shape))

    return _wrap(a.data.reshape(shape), (a,), bw)


def getitem(a, idx) -> Tensor:
    """Basic or advanced indexing; gradients scatter back (summing repeats)."""
    a = as_tensor(a)
    parts = idx if isinstance(idx, tuple) else (idx,)
    basic = all(isinstance(p, (int, slice, type(Ellipsis))) or p is None for p in parts)

    def bw(g):
        if not a.requires_grad:
            return
        if a.grad is None:
            a.grad = np.zeros_like(a.data)
        if basic:
            a.grad[idx] += g
        else:
            np.add.at(a.grad, idx, g)

    return _wrap(a.data[idx], (a,), bw)


def embedding(table, ids) -> Tensor:
    """Row lookup ``table[ids]`` with a scatter-add backward."""
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)

    def bw(g):
        if not table.requires_grad:
            return
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, ids.reshape(-1), g.reshape(-1, table.data.shape[1]))

    return _wrap(table.data[ids], (table,), bw)


def concat(tensors, axis: int = -1) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    out = np.concatenate([t.data for t in ts], axis=axis)
    ax = axis % out.ndim
    bounds = np.cumsum([0] + [t.data.shape[ax] for t in ts])

    def bw(g):
        for t, lo, hi in zip(ts, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[ax] = slice(lo, hi)
                accumulate(t, g[tuple(sl)])

    return _wrap(out, ts, bw)


def stack(tensors, axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    out = np.stack([t.data for t in ts], axis=axis)

    def bw(g):
        for i, t in enumerate(ts):
            if t.requires_grad:
                accumulate(t, np.take(g, i, axis=axis))

    return _wrap(out, ts, bw)


def unstack(a, axis: int = 0) -> list[Tensor]:
    """Split along ``axis`` into views sharing one gradient buffer on ``a``."""
    a = as_tensor(a)
    outs = []
    for i in range(a.data.shape[axis]):
        sl = [slice(None)] * a.data.ndim
        sl[axis] = i
        key = tuple(sl)

        def bw(g, key=key):
            if not a.requires_grad:
                return
            if a.grad is None:
                a.grad = np.zeros_like(a.data)
            a.grad[key] += g

        outs.append(_wrap(a.data[key], (a,), bw))
    return outs


# ---------------------------------------------------------------- activations

def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0

    def bw(g):
        accumulate(a, g * mask)

    return _wrap(a.data * mask, (a,), bw)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    s = _sigmoid(a.data)

    def bw(g):
        accumulate(a, g * s * (1.0 - s))

    return _wrap(s, (a,), bw)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    t = np.tanh(a.data)

    def bw(g):
        accumulate(a, g * (1.0 - t * t))

    return _wrap(t, (a,), bw)


def exp(a) -> Tensor:
    a = as_tensor(a)
    e = np.exp(a.data)

    def bw(g):
        accumulate(a, g * e)

    return _wrap(e, (a,), bw)


def log(a) -> Tensor:
    a = as_tensor(a)

    def bw(g):
        accumulate(a, g / a.data)

    return _wrap(np.log(a.data), (a,), bw)


def clip(a, lo: float, hi: float) -> Tensor:
    """Clamp; the gradient is zero wherever the clamp is active."""
    a = as_tensor(a)
    inside = (a.data >= lo) & (a.data <= hi)

    def bw(g):
        accumulate(a, g * inside)

    return _wrap(np.clip(a.data, lo, hi), (a,), bw)


def softmax(a, axis: int = -1, mask=None) -> Tensor:
    """Shift-invariant softmax. Entries where ``mask`` is False get weight 0."""
    a = as_tensor(a)
    x = a.data
    if mask is not None:
        x = np.where(mask, x, -np.inf)
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        accumulate(a, p * (g - (g * p).sum(axis=axis, keepdims=True)))

    return _wrap(p, (a,), bw)


# -------------------------------------------------------------------- layers

def dense(x, weight, bias) -> Tensor:
    return add(matmul(x, weight), bias)


def conv1d_valid(x, kernels, bias) -> Tensor:
    """Stride-1 valid 1-D convolution.

    ``x`` is (L, d) or (B, L, d); ``kernels`` is (F, k, d); ``bias`` is (F,).
    Output is (L-k+1, F) or (B, L-k+1, F) with
    ``out[t, f] = bias[f] + sum_{i,j} x[t+i, j] * kernels[f, i, j]``.
    """
    x, kernels, bias = as_tensor(x), as_tensor(kernels), as_tensor(bias)
    unbatched = x.data.ndim == 2
    xd = x.data[None] if unbatched else x.data
    F, k, d = kernels.data.shape
    B, L, dx = xd.shape
    if dx != d:
        raise ValueError(f"kernel width {d} does not match input width {dx}")
    if L < k:
        raise ValueError(f"input length {L} shorter than kernel size {k}")
    T = L - k + 1
    windows = np.lib.stride_tricks.sliding_window_view(xd, k, axis=1)  # (B, T, d, k)
    windows = windows.transpose(0, 1, 3, 2).reshape(B * T, k * d)
    wflat = kernels.data.reshape(F, k * d)
    out = (windows @ wflat.T).reshape(B, T, F) + bias.data
    if unbatched:
        out = out[0]

    def bw(g):
        gb = g[None] if unbatched else g
        g2 = gb.reshape(B * T, F)
        if kernels.requires_grad:
            accumulate(kernels, (g2.T @ windows).reshape(F, k, d))
        if bias.requires_grad:
            accumulate(bias, g2.sum(axis=0))
        if x.requires_grad:
            gw = (g2 @ wflat).reshape(B, T, k, d)
            gx = np.zeros_like(xd)
            for i in range(k):
                gx[:, i:i + T, :] += gw[:, :, i, :]
            accumulate(x, gx[0] if unbatched else gx)

    return _wrap(out, (x, kernels, bias), bw)


def global_max_pool(x, mask=None) -> Tensor:
    """Max over the time axis of (T, F) or (B, T, F) input.

    Positions where ``mask`` (shape (T,) or (B, T)) is False are replaced by
    a large negative sentinel. Gradient flows to the first maximising row.
    """
    x = as_tensor(x)
    xd = x.data
    if xd.shape[-2] == 0:
        raise ValueError("cannot pool over zero time steps")
    if mask is not None:
        xd = np.where(np.asarray(mask, dtype=bool)[..., None], xd, NEG_SENTINEL)
    idx = np.argmax(xd, axis=-2)  # first occurrence on ties
    out = np.take_along_axis(xd, idx[..., None, :], axis=-2)[..., 0, :]

    def bw(g):
        if not x.requires_grad:
            return
        gx = np.zeros_like(x.data)
        np.put_along_axis(gx, idx[..., None, :], g[..., None, :], axis=-2)
        accumulate(x, gx)

    result = _wrap(out, (x,), bw)
    return result


def argmax_indices(x, mask=None) -> np.ndarray:
    xd = as_tensor(x).data
    if mask is not None:
        xd = np.where(np.asarray(mask, dtype=bool)[..., None], xd, NEG_SENTINEL)
    return np.argmax(xd, axis=-2)


def dropout(x, p: float, training: bool, rng=None) -> Tensor:
    """Inverted dropout; identity when not training or ``p == 0``.

    ``rng`` may be a numpy Generator or an integer seed.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {p}")
    x = as_tensor(x)
    if not training or p == 0.0:
        return x
    return mul(x, dropout_mask(x.data.shape, p, rng, x.data.dtype))


def dropout_mask(shape, p: float, rng=None, dtype=np.float64) -> np.ndarray:
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {p}")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    keep = rng.random(shape) >= p
    return keep.astype(dtype) / (1.0 - p)


def where_mask(mask, new, old) -> Tensor:
    """``new`` where ``mask`` is 1, ``old`` where it is 0 (mask broadcasts)."""
    new, old = as_tensor(new), as_tensor(old)
    m = np.asarray(mask, dtype=new.data.dtype)

    def bw(g):
        accumulate(new, g * m)
        accumulate(old, g * (1.0 - m))

    return _wrap(m * new.data + (1.0 - m) * old.data, (new, old), bw)


def lstm_cell(x_t, h_prev, c_prev, weight, recurrent, bias):
    """One LSTM step. Gate blocks in ``weight``/``recurrent``/``bias`` are
    ordered input, forget, candidate, output.

    ``weight`` is (d, 4H), ``recurrent`` is (H, 4H), ``bias`` is (4H,).
    """
    z = add(add(matmul(x_t, weight), matmul(h_prev, recurrent)), bias)
    return lstm_gates(z, c_prev)


def lstm_gates(z, c_prev):
    z, c_prev = as_tensor(z), as_tensor(c_prev)
    H = c_prev.data.shape[-1]
    if z.data.shape[-1] != 4 * H:
        raise ValueError(f"gate pre-activations have width {z.data.shape[-1]}, expected {4 * H}")
    i = sigmoid(z[..., 0:H])
    f = sigmoid(z[..., H:2 * H])
    g = tanh(z[..., 2 * H:3 * H])
    o = sigmoid(z[..., 3 * H:4 * H])
    c = add(mul(f, c_prev), mul(i, g))
    h = mul(o, tanh(c))
    return h, c


# --------------------------------------------------------------------- losses

def categorical_cross_entropy(scores, target, normalize: bool = True) -> Tensor:
    """Mean ``-log p[target]`` where ``p`` is ``scores`` rescaled to sum to one
    (when ``normalize``) and clamped to [1e-7, 1 - 1e-7].

    ``scores`` is (C,) or (B, C); ``target`` an int or (B,) int array.
    """
    scores = as_tensor(scores)
    C = scores.data.shape[-1]
    tgt = np.atleast_1d(np.asarray(target))
    if tgt.dtype.kind not in "iu" or np.any(tgt < 0) or np.any(tgt >= C):
        raise ValueError(f"target must be a class index in 0..{C - 1}, got {target!r}")
    s2 = scores if scores.ndim == 2 else reshape(scores, (1, C))
    if normalize:
        s2 = div(s2, sum(s2, axis=1, keepdims=True))
    p = clip(s2, CCE_EPS, 1.0 - CCE_EPS)
    picked = getitem(p, (np.arange(len(tgt)), tgt))
    return mean(mul(log(picked), -1.0))
