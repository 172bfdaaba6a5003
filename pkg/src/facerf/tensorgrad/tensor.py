"""Reverse-mode autodiff over float64 numpy arrays.

A ``Tape`` records operations in execution order (inputs always precede
outputs, so the list is already topologically sorted) and ``backward``
replays it once in reverse, accumulating vector-Jacobian products.  Tapes
are rebuilt per forward pass; nothing here is a static graph.

Gradients are only recorded while a tape is active, so evaluation-only
code pays no tracking overhead.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

_ACTIVE_TAPES: list["Tape"] = []


class Tensor:
    """A float64 array plus gradient bookkeeping."""

    __slots__ = ("data", "grad", "requires_grad")

    # keep numpy from broadcasting over Tensor objects; reflected ops run instead
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def copy(self) -> "Tensor":
        t = Tensor(self.data.copy(), requires_grad=self.requires_grad)
        return t

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    # Arithmetic operators defer to the op functions below.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape)

    def transpose(self, axes=None):
        return transpose(self, axes)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)


def param(data) -> Tensor:
    """A trainable leaf tensor."""
    return Tensor(data, requires_grad=True)


class Tape:
    """Ordered record of operations for one forward pass.

    Used as a context manager; ops executed inside the block that touch a
    grad-tracking tensor append (output, inputs, vjp) entries.
    """

    def __init__(self):
        self._ops = []
        self._produced = set()
        self._leaves = {}

    def __enter__(self) -> "Tape":
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _ACTIVE_TAPES.pop()
        assert popped is self
        return False

    def __len__(self):
        return len(self._ops)

    def _record(self, out: Tensor, inputs, vjp):
        self._ops.append((out, inputs, vjp))
        self._produced.add(id(out))
        for t in inputs:
            if t.requires_grad and id(t) not in self._produced:
                self._leaves[id(t)] = t

    def leaves(self):
        return list(self._leaves.values())


def backward(tape: Tape, loss: Tensor, params=None):
    """Accumulate dloss/dparam into ``.grad`` of every tracked leaf.

    ``loss`` must be a scalar produced on ``tape``.  Leaves in ``params``
    (default: every grad-tracking leaf the tape saw) get their ``.grad``
    overwritten; parameters the loss never touched receive zeros.
    """
    if loss.data.size != 1:
        raise ValueError(f"loss must be scalar, got shape {loss.data.shape}")
    if id(loss) not in tape._produced:
        raise ValueError("loss was not produced on this tape")
    if not np.isfinite(loss.data).all():
        raise FloatingPointError("loss is not finite")

    grads = {id(loss): np.ones_like(loss.data)}
    # Reverse replay; consumers of a node all sit later on the tape, so by
    # the time its producing op is reached the accumulated grad is complete
    # and the node can be popped (each node visited exactly once).
    for out, inputs, vjp in reversed(tape._ops):
        g = grads.pop(id(out), None)
        if g is None:
            continue
        for t, gi in zip(inputs, vjp(g)):
            if gi is None or not t.requires_grad:
                continue
            acc = grads.get(id(t))
            grads[id(t)] = gi if acc is None else acc + gi

    targets = tape.leaves() if params is None else list(params)
    for t in targets:
        g = grads.get(id(t))
        if g is None:
            g = np.zeros_like(t.data)
        elif g.shape != t.data.shape:
            g = np.broadcast_to(g, t.data.shape).copy()
        if not np.isfinite(g).all():
            raise FloatingPointError("non-finite gradient encountered during backward")
        t.grad = g
    return targets


# ---------------------------------------------------------------------------
# op machinery
# ---------------------------------------------------------------------------

def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _apply(forward_value, inputs, vjp) -> Tensor:
    """Wrap a computed value, recording the op if a tape is listening."""
    tape = _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None
    track = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(forward_value, requires_grad=track)
    if track:
        tape._record(out, inputs, vjp)
    return out


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum a broadcasted gradient back down to ``shape``."""
    if g.shape == tuple(shape):
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise binary ops
# ---------------------------------------------------------------------------

def add(a, b):
    if not isinstance(a, Tensor) and not isinstance(b, Tensor):
        return np.add(a, b)
    a, b = _as_tensor(a), _as_tensor(b)
    return _apply(a.data + b.data, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b):
    if not isinstance(a, Tensor) and not isinstance(b, Tensor):
        return np.subtract(a, b)
    a, b = _as_tensor(a), _as_tensor(b)
    return _apply(a.data - b.data, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b):
    if not isinstance(a, Tensor) and not isinstance(b, Tensor):
        return np.multiply(a, b)
    a, b = _as_tensor(a), _as_tensor(b)
    return _apply(a.data * b.data, (a, b),
                  lambda g: (_unbroadcast(g * b.data, a.shape),
                             _unbroadcast(g * a.data, b.shape)))


def div(a, b):
    if not isinstance(a, Tensor) and not isinstance(b, Tensor):
        return np.divide(a, b)
    a, b = _as_tensor(a), _as_tensor(b)
    return _apply(a.data / b.data, (a, b),
                  lambda g: (_unbroadcast(g / b.data, a.shape),
                             _unbroadcast(-g * a.data / (b.data * b.data), b.shape)))


def matmul(a, b):
    if not isinstance(a, Tensor) and not isinstance(b, Tensor):
        return np.matmul(a, b)
    a, b = _as_tensor(a), _as_tensor(b)

    def vjp(g):
        ga = g @ b.data.T if b.data.ndim == 2 else np.outer(g, b.data)
        gb = a.data.T @ g
        return ga, gb

    return _apply(a.data @ b.data, (a, b), vjp)


# ---------------------------------------------------------------------------
# elementwise unary ops
# ---------------------------------------------------------------------------

def neg(a):
    if not isinstance(a, Tensor):
        return np.negative(a)
    return _apply(-a.data, (a,), lambda g: (-g,))


def power(a, p: float):
    if not isinstance(a, Tensor):
        return np.power(a, p)
    p = float(p)
    return _apply(a.data ** p, (a,), lambda g: (g * p * a.data ** (p - 1.0),))


def exp(a):
    if not isinstance(a, Tensor):
        return np.exp(a)
    out = np.exp(a.data)
    return _apply(out, (a,), lambda g: (g * out,))


def log(a):
    if not isinstance(a, Tensor):
        return np.log(a)
    return _apply(np.log(a.data), (a,), lambda g: (g / a.data,))


def sqrt(a):
    if not isinstance(a, Tensor):
        return np.sqrt(a)
    out = np.sqrt(a.data)
    return _apply(out, (a,), lambda g: (g * 0.5 / out,))


def sin(a):
    if not isinstance(a, Tensor):
        return np.sin(a)
    return _apply(np.sin(a.data), (a,), lambda g: (g * np.cos(a.data),))


def cos(a):
    if not isinstance(a, Tensor):
        return np.cos(a)
    return _apply(np.cos(a.data), (a,), lambda g: (-g * np.sin(a.data),))


def sigmoid(a):
    if not isinstance(a, Tensor):
        return expit(a)
    out = expit(a.data)
    return _apply(out, (a,), lambda g: (g * out * (1.0 - out),))


def softplus(a):
    if not isinstance(a, Tensor):
        return np.logaddexp(0.0, a)
    return _apply(np.logaddexp(0.0, a.data), (a,), lambda g: (g * expit(a.data),))


def relu(a):
    if not isinstance(a, Tensor):
        return np.maximum(a, 0.0)
    return _apply(np.maximum(a.data, 0.0), (a,), lambda g: (g * (a.data > 0.0),))


def leaky_relu(a, slope: float = 0.2):
    if not isinstance(a, Tensor):
        return np.where(a > 0.0, a, slope * a)
    mask = a.data > 0.0
    return _apply(np.where(mask, a.data, slope * a.data), (a,),
                  lambda g: (g * np.where(mask, 1.0, slope),))


def clip(a, lo, hi):
    """Clamp with pass-through gradient inside [lo, hi], zero outside."""
    if not isinstance(a, Tensor):
        return np.clip(a, lo, hi)
    lo_ok = True if lo is None else a.data >= lo
    hi_ok = True if hi is None else a.data <= hi
    mask = np.logical_and(lo_ok, hi_ok)
    return _apply(np.clip(a.data, lo, hi), (a,), lambda g: (g * mask,))


# ---------------------------------------------------------------------------
# reductions and scans
# ---------------------------------------------------------------------------

def tsum(a, axis=None, keepdims=False):
    if not isinstance(a, Tensor):
        return np.sum(a, axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _apply(np.sum(a.data, axis=axis, keepdims=keepdims), (a,), vjp)


def tmean(a, axis=None, keepdims=False):
    if not isinstance(a, Tensor):
        return np.mean(a, axis=axis, keepdims=keepdims)
    count = a.data.size if axis is None else np.prod(
        [a.data.shape[ax] for ax in (axis if isinstance(axis, tuple) else (axis,))])

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g / count, a.shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg / count, a.shape).copy(),)

    return _apply(np.mean(a.data, axis=axis, keepdims=keepdims), (a,), vjp)


def cumsum(a, axis):
    if not isinstance(a, Tensor):
        return np.cumsum(a, axis=axis)

    def vjp(g):
        return (np.flip(np.cumsum(np.flip(g, axis), axis=axis), axis),)

    return _apply(np.cumsum(a.data, axis=axis), (a,), vjp)


# ---------------------------------------------------------------------------
# shape ops
# ---------------------------------------------------------------------------

def reshape(a, shape):
    if not isinstance(a, Tensor):
        return np.reshape(a, shape)
    old = a.shape
    return _apply(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def transpose(a, axes=None):
    if not isinstance(a, Tensor):
        return np.transpose(a, axes)
    if axes is None:
        inv = None
    else:
        inv = np.argsort(axes)
    return _apply(np.transpose(a.data, axes), (a,),
                  lambda g: (np.transpose(g, inv),))


def getitem(a, idx):
    if not isinstance(a, Tensor):
        return a[idx]

    def vjp(g):
        out = np.zeros_like(a.data)
        np.add.at(out, idx, g)
        return (out,)

    return _apply(a.data[idx], (a,), vjp)


def concat(parts, axis=0):
    if not any(isinstance(p, Tensor) for p in parts):
        return np.concatenate(parts, axis=axis)
    parts = [_as_tensor(p) for p in parts]
    sizes = [p.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return _apply(np.concatenate([p.data for p in parts], axis=axis), tuple(parts), vjp)


def stack(parts, axis=0):
    if not any(isinstance(p, Tensor) for p in parts):
        return np.stack(parts, axis=axis)
    parts = [_as_tensor(p) for p in parts]

    def vjp(g):
        return tuple(np.moveaxis(g, axis, 0))

    return _apply(np.stack([p.data for p in parts], axis=axis), tuple(parts), vjp)


# ---------------------------------------------------------------------------
# conv / resampling (NCHW, stride 1, zero "same" padding, odd kernels)
# ---------------------------------------------------------------------------

def _conv2d_raw(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    kh, kw = w.shape[2], w.shape[3]
    ph, pw = kh // 2, kw // 2
    n, c, hh, ww_ = x.shape
    if ph == 0 and pw == 0:
        xp = x
    else:
        xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    out = np.zeros((n, w.shape[0], hh, ww_))
    for u in range(kh):
        for v in range(kw):
            out += np.einsum("oc,nchw->nohw", w[:, :, u, v],
                             xp[:, :, u:u + hh, v:v + ww_], optimize=True)
    return out


def conv2d(x, w):
    """2-D convolution, stride 1, zero-padded to keep spatial size."""
    if not isinstance(x, Tensor) and not isinstance(w, Tensor):
        return _conv2d_raw(x, w)
    x, w = _as_tensor(x), _as_tensor(w)
    kh, kw = w.shape[2], w.shape[3]
    ph, pw = kh // 2, kw // 2

    def vjp(g):
        # dx: same-shaped conv with channel-transposed, spatially flipped kernel
        w_flip = w.data.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1]
        gx = _conv2d_raw(g, w_flip)
        # dw[o,c,u,v] = sum_{n,i,j} g[n,o,i,j] * xpad[n,c,i+u,j+v]
        n, c, hh, ww_ = x.shape
        if ph == 0 and pw == 0:
            xp = x.data
        else:
            xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
        gw = np.empty_like(w.data)
        for u in range(kh):
            for v in range(kw):
                gw[:, :, u, v] = np.einsum("nohw,nchw->oc", g,
                                           xp[:, :, u:u + hh, v:v + ww_], optimize=True)
        return gx, gw

    return _apply(_conv2d_raw(x.data, w.data), (x, w), vjp)


def upsample2(x):
    """Nearest-neighbour 2x upsampling on the last two axes."""
    if not isinstance(x, Tensor):
        return np.repeat(np.repeat(x, 2, axis=-2), 2, axis=-1)
    n, c, h, w = x.shape

    def vjp(g):
        return (g.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5)),)

    out = np.repeat(np.repeat(x.data, 2, axis=-2), 2, axis=-1)
    return _apply(out, (x,), vjp)
