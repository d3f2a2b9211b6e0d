"""Reverse-mode automatic differentiation over dense multi-dimensional arrays.

A Tensor wraps a float64 ndarray plus an optional gradient. Operations build
an acyclic graph; backward() walks it in reverse topological order. All math
is 64-bit so finite-difference checks are reliable at tight tolerances.

Conventions:
  * image batches are [N, H, W, C]
  * matmul operands are 2-D
  * gradient buffers are allocated lazily and accumulated with +=
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible for an op."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=()):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = tuple(_parents)
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        """A leaf tensor sharing this tensor's values but cut from the graph."""
        return Tensor(self.data, requires_grad=False)

    def backward(self):
        backward(self)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def tensor(data, requires_grad: bool = False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accum(t: Tensor, g: np.ndarray):
    if t.grad is None:
        # own the buffer: backward closures may hand the same array to
        # several parents
        t.grad = np.array(g, dtype=np.float64)
    else:
        t.grad += g


def _needs(*ts: Tensor) -> bool:
    return any(t.requires_grad for t in ts)


def _node(data, parents, backward_fn) -> Tensor:
    out = Tensor(data, requires_grad=_needs(*parents), _parents=parents)
    if out.requires_grad:
        out._backward = backward_fn
    else:
        out._parents = ()
    return out


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Reduce gradient g back to `shape` after numpy broadcasting."""
    if g.shape == tuple(shape):
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _check_broadcast(a: Tensor, b: Tensor, opname: str):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{opname}: shapes {a.shape} and {b.shape} do not broadcast")


# ---------------------------------------------------------------------------
# elementwise

def add(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "add")
    out_data = a.data + b.data

    def back():
        if a.requires_grad:
            _accum(a, _unbroadcast(out.grad, a.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(out.grad, b.shape))

    out = _node(out_data, (a, b), back)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "sub")
    out_data = a.data - b.data

    def back():
        if a.requires_grad:
            _accum(a, _unbroadcast(out.grad, a.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(-out.grad, b.shape))

    out = _node(out_data, (a, b), back)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "mul")
    out_data = a.data * b.data

    def back():
        if a.requires_grad:
            _accum(a, _unbroadcast(out.grad * b.data, a.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(out.grad * a.data, b.shape))

    out = _node(out_data, (a, b), back)
    return out


def neg(a: Tensor) -> Tensor:
    def back():
        _accum(a, -out.grad)

    out = _node(-a.data, (a,), back)
    return out


def affine(a: Tensor, scale: float, shift: float = 0.0) -> Tensor:
    """scale * a + shift with python-float coefficients."""
    s = float(scale)

    def back():
        _accum(a, out.grad * s)

    out = _node(a.data * s + float(shift), (a,), back)
    return out


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def back():
        _accum(a, out.grad * mask)

    out = _node(np.where(mask, a.data, 0.0), (a,), back)
    return out


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)

    def back():
        _accum(a, out.grad * (1.0 - y * y))

    out = _node(y, (a,), back)
    return out


def sigmoid(a: Tensor) -> Tensor:
    y = np.empty_like(a.data)
    pos = a.data >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-a.data[pos]))
    e = np.exp(a.data[~pos])
    y[~pos] = e / (1.0 + e)

    def back():
        _accum(a, out.grad * y * (1.0 - y))

    out = _node(y, (a,), back)
    return out


def square(a: Tensor) -> Tensor:
    def back():
        _accum(a, out.grad * 2.0 * a.data)

    out = _node(a.data * a.data, (a,), back)
    return out


def absolute(a: Tensor) -> Tensor:
    # subgradient 0 at the kink
    def back():
        _accum(a, out.grad * np.sign(a.data))

    out = _node(np.abs(a.data), (a,), back)
    return out


def sqrt(a: Tensor, eps: float = 0.0) -> Tensor:
    y = np.sqrt(a.data + eps)

    def back():
        _accum(a, out.grad * 0.5 / y)

    out = _node(y, (a,), back)
    return out


# ---------------------------------------------------------------------------
# linear algebra / reductions

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dims differ, {a.shape} @ {b.shape}")
    out_data = a.data @ b.data

    def back():
        if a.requires_grad:
            _accum(a, out.grad @ b.data.T)
        if b.requires_grad:
            _accum(b, a.data.T @ out.grad)

    out = _node(out_data, (a, b), back)
    return out


def reduce_sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def back():
        g = out.grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(g, a.shape))

    out = _node(out_data, (a,), back)
    return out


def reduce_mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        n = a.size
    else:
        n = a.shape[axis]
    out_data = a.data.mean(axis=axis, keepdims=keepdims)

    def back():
        g = out.grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(g, a.shape) / n)

    out = _node(out_data, (a,), back)
    return out


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=axis, keepdims=True)

    def back():
        dot = (out.grad * p).sum(axis=axis, keepdims=True)
        _accum(a, p * (out.grad - dot))

    out = _node(p, (a,), back)
    return out


def concat(ts, axis: int = 0) -> Tensor:
    ts = list(ts)
    out_data = np.concatenate([t.data for t in ts], axis=axis)
    sizes = [t.shape[axis] for t in ts]
    offsets = np.cumsum([0] + sizes)

    def back():
        for t, lo, hi in zip(ts, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * out.grad.ndim
                idx[axis] = slice(lo, hi)
                _accum(t, out.grad[tuple(idx)])

    out = _node(out_data, tuple(ts), back)
    return out


def reshape(a: Tensor, shape) -> Tensor:
    def back():
        _accum(a, out.grad.reshape(a.shape))

    out = _node(a.data.reshape(shape), (a,), back)
    return out


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice [start, start+length) along one axis."""
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)

    def back():
        g = np.zeros(a.shape)
        g[idx] = out.grad
        _accum(a, g)

    out = _node(a.data[idx], (a,), back)
    return out


def transpose2d(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeError("transpose2d expects a 2-D tensor")

    def back():
        _accum(a, out.grad.T)

    out = _node(a.data.T.copy(), (a,), back)
    return out


def gather_rows(a: Tensor, idx) -> Tensor:
    """Select rows of a 2-D tensor; backward scatter-adds."""
    if a.data.ndim != 2:
        raise ShapeError("gather_rows expects a 2-D tensor")
    idx = np.asarray(idx, dtype=np.int64)

    def back():
        g = np.zeros(a.shape)
        np.add.at(g, idx, out.grad)
        _accum(a, g)

    out = _node(a.data[idx], (a,), back)
    return out


# ---------------------------------------------------------------------------
# neural-net ops

def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x @ w + b for a [N, in] batch."""
    return add(matmul(x, w), b)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    n = x.shape[-1]
    if gain.shape != (n,) or bias.shape != (n,):
        raise ShapeError("layer_norm: gain/bias must match feature dim")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv

    def back():
        g = out.grad
        if gain.requires_grad:
            _accum(gain, (g * xhat).reshape(-1, n).sum(axis=0))
        if bias.requires_grad:
            _accum(bias, g.reshape(-1, n).sum(axis=0))
        if x.requires_grad:
            gx = g * gain.data
            m1 = gx.mean(axis=-1, keepdims=True)
            m2 = (gx * xhat).mean(axis=-1, keepdims=True)
            _accum(x, inv * (gx - m1 - xhat * m2))

    out = _node(xhat * gain.data + bias.data, (x, gain, bias), back)
    return out


def dropout(x: Tensor, rate: float, rng: np.random.Generator | None,
            training: bool) -> Tensor:
    """Inverted dropout: eval mode is the identity in expectation."""
    if not training or rate <= 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    keep = 1.0 - rate
    mask = (rng.random(x.shape) < keep) / keep

    def back():
        _accum(x, out.grad * mask)

    out = _node(x.data * mask, (x,), back)
    return out


_COL_INDEX_CACHE: dict = {}


def _conv_geometry(h, w, cin, kh, kw, stride, pad):
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (w + 2 * pad - kw) // stride + 1
    key = (h, w, cin, kh, kw, stride, pad)
    if key not in _COL_INDEX_CACHE:
        hp, wp = h + 2 * pad, w + 2 * pad
        oy, ox = np.meshgrid(np.arange(ho), np.arange(wo), indexing="ij")
        ky, kx, kc = np.meshgrid(np.arange(kh), np.arange(kw), np.arange(cin),
                                 indexing="ij")
        iy = oy.reshape(-1, 1) * stride + ky.reshape(1, -1)
        ix = ox.reshape(-1, 1) * stride + kx.reshape(1, -1)
        flat = (iy * wp + ix) * cin + kc.reshape(1, -1)
        _COL_INDEX_CACHE[key] = flat.astype(np.int64)
    return ho, wo, _COL_INDEX_CACHE[key]


def _im2col(xp: np.ndarray, kh, kw, stride, ho, wo):
    n, hp, wp, cin = xp.shape
    sn, sh, sw, sc = xp.strides
    view = np.lib.stride_tricks.as_strided(
        xp,
        shape=(n, ho, wo, kh, kw, cin),
        strides=(sn, sh * stride, sw * stride, sh, sw, sc),
        writeable=False,
    )
    return view.reshape(n, ho * wo, kh * kw * cin)


def conv2d(x: Tensor, w: Tensor, b: Tensor, stride: int = 1, pad: int = 1) -> Tensor:
    """2-D convolution over [N, H, W, Cin] with kernel [kh, kw, Cin, Cout].

    Zero padding; stride 1 or 2.
    """
    if x.data.ndim != 4:
        raise ShapeError(f"conv2d input must be [N,H,W,C], got {x.shape}")
    kh, kw, cin, cout = w.shape
    n, h, wdt, cx = x.shape
    if cx != cin:
        raise ShapeError(f"conv2d: input channels {cx} != kernel channels {cin}")
    if stride not in (1, 2):
        raise ShapeError("conv2d supports stride 1 or 2")
    ho, wo, colidx = _conv_geometry(h, wdt, cin, kh, kw, stride, pad)
    xp = np.pad(x.data, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    cols = _im2col(xp, kh, kw, stride, ho, wo)          # [N, HoWo, khkwC]
    wmat = w.data.reshape(kh * kw * cin, cout)
    out_data = (cols.reshape(-1, kh * kw * cin) @ wmat + b.data)
    out_data = out_data.reshape(n, ho, wo, cout)

    def back():
        g = out.grad.reshape(n, ho * wo, cout)
        if b.requires_grad:
            _accum(b, g.sum(axis=(0, 1)))
        if w.requires_grad:
            gw = cols.reshape(-1, kh * kw * cin).T @ g.reshape(-1, cout)
            _accum(w, gw.reshape(w.shape))
        if x.requires_grad:
            dcols = g @ wmat.T                          # [N, HoWo, khkwC]
            hp, wp = h + 2 * pad, wdt + 2 * pad
            span = hp * wp * cin
            offsets = np.arange(n, dtype=np.int64)[:, None, None] * span
            flat_idx = (colidx[None, :, :] + offsets).ravel()
            gxp = np.bincount(flat_idx, weights=dcols.ravel(),
                              minlength=n * span)
            gxp = gxp.reshape(n, hp, wp, cin)
            if pad:
                gxp = gxp[:, pad:-pad, pad:-pad, :]
            _accum(x, gxp)

    out = _node(out_data, (x, w, b), back)
    return out


_UPSAMPLE_CACHE: dict = {}


def _lerp_matrix(n_out: int, n_in: int) -> np.ndarray:
    key = (n_out, n_in)
    if key not in _UPSAMPLE_CACHE:
        m = np.zeros((n_out, n_in))
        if n_in == 1:
            m[:, 0] = 1.0
        else:
            src = np.arange(n_out) * (n_in - 1) / (n_out - 1)
            lo = np.floor(src).astype(int)
            lo = np.minimum(lo, n_in - 2)
            t = src - lo
            m[np.arange(n_out), lo] = 1.0 - t
            m[np.arange(n_out), lo + 1] = t
        _UPSAMPLE_CACHE[key] = m
    return _UPSAMPLE_CACHE[key]


def _resize_rows_cols(arr, mv, mh):
    """Apply row matrix mv and column matrix mh to [N, h, w, C]."""
    n, h, w, c = arr.shape
    rows = np.matmul(mv, arr.reshape(n, h, w * c))          # [n, H, w*c]
    hh = rows.shape[1]
    cols = rows.reshape(n, hh, w, c).swapaxes(2, 3)         # [n, H, c, w]
    cols = np.matmul(cols, mh.T)                            # [n, H, c, W]
    return cols.swapaxes(2, 3)


def upsample_bilinear(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """Bilinear resize of [N, H, W, C] to [N, out_h, out_w, C] (corner-aligned)."""
    if x.data.ndim != 4:
        raise ShapeError("upsample_bilinear input must be [N,H,W,C]")
    n, h, w, c = x.shape
    mv = _lerp_matrix(out_h, h)
    mh = _lerp_matrix(out_w, w)
    out_data = _resize_rows_cols(x.data, mv, mh)

    def back():
        _accum(x, _resize_rows_cols(out.grad, mv.T, mh.T))

    out = _node(out_data, (x,), back)
    return out


def spatial_softmax(x: Tensor) -> Tensor:
    """Per-channel softmax over the two spatial axes of [N, H, W, C]."""
    if x.data.ndim != 4:
        raise ShapeError("spatial_softmax input must be [N,H,W,C]")
    n, h, w, c = x.shape
    flat = reshape(x, (n, h * w, c))
    return reshape(softmax(flat, axis=1), (n, h, w, c))


def lstm_cell(x: Tensor, h: Tensor, c: Tensor, w: Tensor, b: Tensor):
    """One step of a standard LSTM.

    w is [(in+hidden), 4*hidden] with gate blocks ordered (i, f, g, o);
    b is [4*hidden]. Returns (h_next, c_next).
    """
    hidden = h.shape[-1]
    if w.shape != (x.shape[-1] + hidden, 4 * hidden):
        raise ShapeError(f"lstm_cell: weight shape {w.shape} does not match "
                         f"input {x.shape[-1]} + hidden {hidden}")
    z = linear(concat([x, h], axis=1), w, b)
    i = sigmoid(narrow(z, 1, 0, hidden))
    f = sigmoid(narrow(z, 1, hidden, hidden))
    g = tanh(narrow(z, 1, 2 * hidden, hidden))
    o = sigmoid(narrow(z, 1, 3 * hidden, hidden))
    c_next = add(mul(f, c), mul(i, g))
    h_next = mul(o, tanh(c_next))
    return h_next, c_next


# ---------------------------------------------------------------------------
# losses

def squared_error(a: Tensor, b: Tensor) -> Tensor:
    """Sum of squared differences."""
    if a.shape != b.shape:
        raise ShapeError(f"squared_error: shapes {a.shape} vs {b.shape}")
    return reduce_sum(square(sub(a, b)))


def absolute_error(a: Tensor, b: Tensor) -> Tensor:
    """Sum of absolute differences."""
    if a.shape != b.shape:
        raise ShapeError(f"absolute_error: shapes {a.shape} vs {b.shape}")
    return reduce_sum(absolute(sub(a, b)))


# ---------------------------------------------------------------------------
# graph traversal

def _topo_order(root: Tensor):
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad:
                stack.append((p, False))
    return order


def backward(loss: Tensor):
    """Populate .grad on every requires_grad tensor reachable from loss."""
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ValueError("loss does not require grad; nothing to differentiate")
    order = _topo_order(loss)
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward()


def zero_grads(tensors):
    for t in tensors:
        t.grad = None


def forward_backward(loss: Tensor, leaves) -> dict:
    """Clear leaf gradients, backprop from loss, return {leaf_index: grad}."""
    leaves = list(leaves)
    zero_grads(leaves)
    backward(loss)
    return {i: (t.grad if t.grad is not None else np.zeros(t.shape))
            for i, t in enumerate(leaves)}
