"""RMSProp with a stepped learning-rate schedule and optional gradient clipping.

Update rule:
    acc   <- alpha * acc + (1 - alpha) * grad^2
    param <- param - lr * grad / (sqrt(acc) + eps)       eps = 1e-8

The learning rate after k completed decay intervals is exactly
initial * factor**k. Clipping (when configured) rescales gradients before
they enter the accumulator, either by global norm across all parameters
(default) or per element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor

EPS = 1e-8


@dataclass
class RmsPropState:
    alpha: float = 0.9
    learning_rate: float = 1e-4
    decay_factor: float = 1.0
    decay_interval: int = 0          # 0 disables the schedule
    clip_max_norm: float | None = None
    clip_mode: str = "global_norm"   # or "per_element"
    step: int = 0
    algorithm: str = "rmsprop"
    accumulators: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.clip_mode not in ("global_norm", "per_element"):
            raise ValueError(f"unknown clip_mode {self.clip_mode!r}")

    def scalars(self) -> dict:
        """Flat scalar summary for checkpoint manifests."""
        return {
            "algorithm": self.algorithm,
            "alpha": self.alpha,
            "learning_rate": self.learning_rate,
            "decay_factor": self.decay_factor,
            "decay_interval": self.decay_interval,
            "clip_max_norm": self.clip_max_norm,
            "clip_mode": self.clip_mode,
            "step": self.step,
        }


def current_lr(state: RmsPropState) -> float:
    if state.decay_interval and state.decay_factor != 1.0:
        k = state.step // state.decay_interval
        return state.learning_rate * state.decay_factor ** k
    return state.learning_rate


def clip_gradients(grads: dict, max_norm: float, mode: str = "global_norm") -> dict:
    """Return gradients rescaled so the configured norm is <= max_norm."""
    if mode == "per_element":
        return {k: np.clip(g, -max_norm, max_norm) for k, g in grads.items()}
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total <= max_norm or total == 0.0:
        return grads
    scale = max_norm / total
    return {k: g * scale for k, g in grads.items()}


def rmsprop_step(state: RmsPropState, params: dict, grads: dict | None = None):
    """Apply one update in place to `params` (name -> Tensor).

    grads defaults to each parameter's .grad. Returns (params, state) for
    call-site convenience; both are mutated.
    """
    if grads is None:
        grads = {}
        for name, p in params.items():
            grads[name] = p.grad if p.grad is not None else np.zeros(p.shape)
    for name, p in params.items():
        if grads[name].shape != p.data.shape:
            raise ValueError(f"grad shape {grads[name].shape} != param shape "
                             f"{p.data.shape} for {name!r}")
    if state.clip_max_norm is not None:
        grads = clip_gradients(grads, state.clip_max_norm, state.clip_mode)
    lr = current_lr(state)
    for name, p in params.items():
        g = grads[name]
        acc = state.accumulators.get(name)
        if acc is None:
            acc = np.zeros(p.data.shape)
        acc = state.alpha * acc + (1.0 - state.alpha) * g * g
        state.accumulators[name] = acc
        p.data = p.data - lr * g / (np.sqrt(acc) + EPS)
    state.step += 1
    return params, state
