"""Central finite-difference gradient checking."""
from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .tensor import Tensor, backward, parameter


def numeric_grad(f: Callable[[], float], x: np.ndarray, eps: float = 1e-4) -> np.ndarray:
    """Central differences of scalar ``f()`` with respect to ``x``, perturbed in place."""
    g = np.zeros(x.shape, dtype=np.float64)
    for i in np.ndindex(x.shape):  # index in place: reshape may copy non-contiguous input
        old = x[i]
        x[i] = old + eps
        hi = f()
        x[i] = old - eps
        lo = f()
        x[i] = old
        g[i] = (hi - lo) / (2 * eps)
    return g


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """``|a - b| / max(|a| + |b|, tiny)`` in the Frobenius norm."""
    den = np.linalg.norm(a) + np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / max(den, 1e-12))


def check_gradients(loss_fn: Callable[[Mapping[str, Tensor]], Tensor], arrays: Mapping[str, np.ndarray],
                    eps: float = 1e-4) -> dict[str, float]:
    """Compare autodiff against finite differences for every array.

    ``loss_fn`` builds a scalar loss from leaf tensors keyed like ``arrays``.
    Arrays are cast to float64 copies; returns the relative error per name.
    """
    data = {k: np.array(v, dtype=np.float64) for k, v in arrays.items()}
    leaves = {k: parameter(v, name=k) for k, v in data.items()}
    names = list(leaves)
    grads = backward(loss_fn(leaves), [leaves[k] for k in names])

    def value() -> float:
        return float(loss_fn({k: Tensor(data[k]) for k in names}).item())

    return {k: relative_error(g, numeric_grad(value, data[k], eps)) for k, g in zip(names, grads)}
