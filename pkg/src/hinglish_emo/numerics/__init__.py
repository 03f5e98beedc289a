from .checkpoint import load_checkpoint, save_checkpoint
from .ops import (
    categorical_cross_entropy,
    concat,
    conv1d_valid,
    dense,
    dropout,
    embedding,
    global_max_pool,
    lstm_cell,
    relu,
    sigmoid,
    softmax,
    stack,
    tanh,
)
from .optim import AdamState, adam_update
from .tensor import Tensor, as_tensor, backward, parameter

__all__ = [
    "AdamState",
    "Tensor",
    "adam_update",
    "as_tensor",
    "backward",
    "categorical_cross_entropy",
    "concat",
    "conv1d_valid",
    "dense",
    "dropout",
    "embedding",
    "global_max_pool",
    "load_checkpoint",
    "lstm_cell",
    "parameter",
    "relu",
    "save_checkpoint",
    "sigmoid",
    "softmax",
    "stack",
    "tanh",
]
