"""Central finite-difference gradient checking.

The oracle side never touches the analytic backward pass: it re-evaluates the
function at perturbed points, so agreement is meaningful evidence.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, backward


def finite_difference_check(fn, point: np.ndarray, h: float = 1e-5,
                            tolerance: float = 1e-3, max_coords: int | None = None,
                            rng: np.random.Generator | None = None):
    """Compare analytic and central-difference gradients of a scalar function.

    fn maps a Tensor to a scalar Tensor and must be deterministic (seed any
    internal randomness per call). Returns (passed, max_relative_error).
    When max_coords is given, a random subset of coordinates is probed;
    otherwise every coordinate is.
    """
    point = np.asarray(point, dtype=np.float64)
    x = Tensor(point.copy(), requires_grad=True)
    loss = fn(x)
    if loss.data.size != 1:
        raise ValueError("finite_difference_check needs a scalar-valued function")
    backward(loss)
    analytic = x.grad if x.grad is not None else np.zeros(point.shape)
    analytic = analytic.reshape(-1)

    flat = point.reshape(-1)
    n = flat.size
    if max_coords is not None and max_coords < n:
        if rng is None:
            rng = np.random.default_rng(0)
        coords = rng.choice(n, size=max_coords, replace=False)
    else:
        coords = np.arange(n)

    max_rel = 0.0
    for i in coords:
        bump = flat.copy()
        bump[i] += h
        f_plus = float(fn(Tensor(bump.reshape(point.shape))).data)
        bump[i] -= 2 * h
        f_minus = float(fn(Tensor(bump.reshape(point.shape))).data)
        numeric = (f_plus - f_minus) / (2 * h)
        denom = max(abs(analytic[i]), abs(numeric), 1e-6)
        rel = abs(analytic[i] - numeric) / denom
        if rel > max_rel:
            max_rel = rel
    return max_rel <= tolerance, max_rel
