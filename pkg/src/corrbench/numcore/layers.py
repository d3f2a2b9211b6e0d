"""Parameter initializers for the small networks used across the benchmark."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def dense_params(rng: np.random.Generator, n_in: int, n_out: int,
                 scale: float | None = None):
    """He-style init for a dense layer; returns (w, b) Tensors."""
    if scale is None:
        scale = np.sqrt(2.0 / n_in)
    w = Tensor(rng.normal(0.0, scale, size=(n_in, n_out)), requires_grad=True)
    b = Tensor(np.zeros(n_out), requires_grad=True)
    return w, b


def conv_params(rng: np.random.Generator, kh: int, kw: int, cin: int, cout: int):
    fan_in = kh * kw * cin
    scale = np.sqrt(2.0 / fan_in)
    w = Tensor(rng.normal(0.0, scale, size=(kh, kw, cin, cout)), requires_grad=True)
    b = Tensor(np.zeros(cout), requires_grad=True)
    return w, b


def lstm_params(rng: np.random.Generator, n_in: int, hidden: int):
    """Fused-gate LSTM weights with forget-gate bias of 1."""
    scale = 1.0 / np.sqrt(n_in + hidden)
    w = Tensor(rng.normal(0.0, scale, size=(n_in + hidden, 4 * hidden)),
               requires_grad=True)
    b0 = np.zeros(4 * hidden)
    b0[hidden:2 * hidden] = 1.0
    b = Tensor(b0, requires_grad=True)
    return w, b


def layer_norm_params(n: int):
    return (Tensor(np.ones(n), requires_grad=True),
            Tensor(np.zeros(n), requires_grad=True))
