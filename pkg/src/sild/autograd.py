"""Minimal reverse-mode autodiff over dense real numpy arrays.

Exactly the primitive closure the spectral-invariant pipeline needs: no
complex dtype (complex values travel as real/imaginary pairs), no
higher-order derivatives, no GPU. Each op records its parents and a
vector-Jacobian closure on the output node; ``backward`` walks the
recorded applications once, in reverse topological order.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible for a primitive."""


class Tensor:
    """A dense real array plus an optional gradient buffer.

    Nodes created by primitives carry ``_parents`` (input tensors) and
    ``_vjps`` (one vector-Jacobian closure per parent); leaves carry none.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_vjps")

    def __init__(self, data, requires_grad=False, _parents=(), _vjps=()):
        self.data = np.asarray(data)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = _parents
        self._vjps = _vjps

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def detach(self):
        """A constant view of this value; gradients stop here."""
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self):
        self.grad = None

    def item(self):
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # operator sugar; constants are promoted to leaf tensors
    def __add__(self, other):
        return add(self, _as_tensor(other, self.dtype))

    def __radd__(self, other):
        return add(_as_tensor(other, self.dtype), self)

    def __sub__(self, other):
        return sub(self, _as_tensor(other, self.dtype))

    def __rsub__(self, other):
        return sub(_as_tensor(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, _as_tensor(other, self.dtype))

    def __rmul__(self, other):
        return mul(_as_tensor(other, self.dtype), self)

    def __truediv__(self, other):
        return div(self, _as_tensor(other, self.dtype))

    def __rtruediv__(self, other):
        return div(_as_tensor(other, self.dtype), self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return neg(self)


def _as_tensor(x, dtype=None):
    if isinstance(x, Tensor):
        return x
    arr = np.asarray(x)
    if dtype is not None and arr.dtype != dtype:
        arr = arr.astype(dtype)
    return Tensor(arr)


def _node(data, parents, vjps):
    req = any(p.requires_grad for p in parents)
    if not req:
        return Tensor(data)
    keep_p, keep_v = [], []
    for p, v in zip(parents, vjps):
        if p.requires_grad:
            keep_p.append(p)
            keep_v.append(v)
    return Tensor(data, requires_grad=True, _parents=tuple(keep_p), _vjps=tuple(keep_v))


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(name, a, b):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{name}: shapes {a.shape} and {b.shape} do not broadcast")


# ---------------------------------------------------------------------------
# binary elementwise
# ---------------------------------------------------------------------------

def add(a, b):
    _check_broadcast("add", a, b)
    return _node(a.data + b.data,
                 (a, b),
                 (lambda g: _unbroadcast(g, a.shape),
                  lambda g: _unbroadcast(g, b.shape)))


def sub(a, b):
    _check_broadcast("sub", a, b)
    return _node(a.data - b.data,
                 (a, b),
                 (lambda g: _unbroadcast(g, a.shape),
                  lambda g: _unbroadcast(-g, b.shape)))


def mul(a, b):
    _check_broadcast("mul", a, b)
    return _node(a.data * b.data,
                 (a, b),
                 (lambda g: _unbroadcast(g * b.data, a.shape),
                  lambda g: _unbroadcast(g * a.data, b.shape)))


def div(a, b):
    _check_broadcast("div", a, b)
    return _node(a.data / b.data,
                 (a, b),
                 (lambda g: _unbroadcast(g / b.data, a.shape),
                  lambda g: _unbroadcast(-g * a.data / (b.data * b.data), b.shape)))


def arctan2(y, x):
    """Quadrant-aware angle of (x, y); arctan2(0, 0) = 0 by convention."""
    _check_broadcast("arctan2", y, x)
    denom = y.data * y.data + x.data * x.data
    # avoid 0/0 at the origin; the true partials are undefined there
    safe = np.where(denom == 0.0, 1.0, denom)
    return _node(np.arctan2(y.data, x.data),
                 (y, x),
                 (lambda g: _unbroadcast(g * x.data / safe, y.shape),
                  lambda g: _unbroadcast(-g * y.data / safe, x.shape)))


def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} are not compatible")
    return _node(a.data @ b.data,
                 (a, b),
                 (lambda g: g @ b.data.T,
                  lambda g: a.data.T @ g))


# ---------------------------------------------------------------------------
# unary elementwise
# ---------------------------------------------------------------------------

def neg(a):
    return _node(-a.data, (a,), (lambda g: -g,))


def exp(a):
    out = np.exp(a.data)
    return _node(out, (a,), (lambda g: g * out,))


def log(a):
    return _node(np.log(a.data), (a,), (lambda g: g / a.data,))


def sqrt(a):
    out = np.sqrt(a.data)
    return _node(out, (a,), (lambda g: g * 0.5 / out,))


def square(a):
    return _node(a.data * a.data, (a,), (lambda g: g * 2.0 * a.data,))


def sin(a):
    return _node(np.sin(a.data), (a,), (lambda g: g * np.cos(a.data),))


def cos(a):
    return _node(np.cos(a.data), (a,), (lambda g: -g * np.sin(a.data),))


def sigmoid(a):
    # stable two-sided form
    out = np.where(a.data >= 0,
                   1.0 / (1.0 + np.exp(-np.clip(a.data, 0, None))),
                   np.exp(np.clip(a.data, None, 0)) / (1.0 + np.exp(np.clip(a.data, None, 0))))
    return _node(out, (a,), (lambda g: g * out * (1.0 - out),))


def relu(a):
    mask = a.data > 0
    return _node(np.where(mask, a.data, 0.0), (a,), (lambda g: g * mask,))


def leaky_relu(a, slope=0.2):
    mask = a.data > 0
    return _node(np.where(mask, a.data, slope * a.data),
                 (a,),
                 (lambda g: g * np.where(mask, 1.0, slope),))


# ---------------------------------------------------------------------------
# shape / indexing
# ---------------------------------------------------------------------------

def reshape(a, shape):
    old = a.shape
    return _node(a.data.reshape(shape), (a,), (lambda g: g.reshape(old),))


def transpose(a, axes):
    inv = np.argsort(axes)
    return _node(a.data.transpose(axes), (a,), (lambda g: g.transpose(inv),))


def concat(tensors, axis=-1):
    tensors = list(tensors)
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis if axis >= 0 else t.data.ndim + axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def make_vjp(i):
        def vjp(g):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(offsets[i], offsets[i + 1])
            return g[tuple(idx)]
        return vjp

    return _node(data, tuple(tensors), tuple(make_vjp(i) for i in range(len(tensors))))


def slice_axis0(a, start, stop):
    n = a.shape[0]

    def vjp(g):
        buf = np.zeros(a.shape, dtype=g.dtype)
        buf[start:stop] = g
        return buf

    if not (0 <= start <= stop <= n):
        raise ShapeError(f"slice_axis0: range [{start}, {stop}) outside axis of length {n}")
    return _node(a.data[start:stop], (a,), (vjp,))


def gather(a, index):
    """Select rows ``a[index]`` along axis 0; duplicate indices allowed."""
    index = np.asarray(index, dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= a.shape[0]):
        raise ShapeError(f"gather: index out of range for axis of length {a.shape[0]}")

    def vjp(g):
        buf = np.zeros(a.shape, dtype=g.dtype)
        np.add.at(buf, index, g)
        return buf

    return _node(a.data[index], (a,), (vjp,))


def scatter_add(a, index, num_rows):
    """Sum rows of ``a`` into ``num_rows`` output rows keyed by ``index``."""
    index = np.asarray(index, dtype=np.int64)
    if index.shape[0] != a.shape[0]:
        raise ShapeError(f"scatter_add: {index.shape[0]} indices for {a.shape[0]} rows")
    out = np.zeros((num_rows,) + a.shape[1:], dtype=a.dtype)
    np.add.at(out, index, a.data)
    return _node(out, (a,), (lambda g: g[index],))


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def sum_(a, axis=None, keepdims=False):
    def vjp(g):
        if axis is None:
            return np.broadcast_to(g, a.shape).copy()
        gg = g if keepdims else np.expand_dims(g, axis)
        return np.broadcast_to(gg, a.shape).copy()

    return _node(a.data.sum(axis=axis, keepdims=keepdims), (a,), (vjp,))


def mean(a, axis=None, keepdims=False):
    n = a.size if axis is None else a.shape[axis]

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g / n, a.shape).copy()
        gg = g if keepdims else np.expand_dims(g, axis)
        return np.broadcast_to(gg / n, a.shape).copy()

    return _node(a.data.mean(axis=axis, keepdims=keepdims), (a,), (vjp,))


def variance(a, axis=None, keepdims=False):
    """Population variance (divide by the count, not count-1)."""
    n = a.size if axis is None else a.shape[axis]
    mu = a.data.mean(axis=axis, keepdims=True)
    centered = a.data - mu

    def vjp(g):
        gg = g if (axis is None or keepdims) else np.expand_dims(g, axis)
        return 2.0 / n * centered * gg

    return _node((centered * centered).mean(axis=axis, keepdims=keepdims), (a,), (vjp,))


# ---------------------------------------------------------------------------
# backward pass
# ---------------------------------------------------------------------------

def _toposort(root):
    order, visited = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    return order


def backward(out):
    """Accumulate d(out)/d(leaf) into ``.grad`` of every requires_grad leaf.

    ``out`` must be scalar-shaped (size 1).
    """
    if out.size != 1:
        raise ShapeError(f"backward: output has shape {out.shape}, expected a scalar")
    grads = {id(out): np.ones_like(out.data)}
    for node in reversed(_toposort(out)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if not node._parents:
            if node.requires_grad:
                node.grad = g if node.grad is None else node.grad + g
            continue
        for parent, vjp in zip(node._parents, node._vjps):
            pg = vjp(g)
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg


def grad_check(f, x, eps=1e-5, atol=1e-12):
    """Max relative error between analytic gradient of ``f`` and central differences.

    ``f`` maps a Tensor to a scalar Tensor and must be finite near ``x``;
    functions with kinks at the evaluation point are outside the contract.
    Coordinates where the absolute disagreement is below ``atol`` count as
    exact: analytically-zero paths (e.g. the Nyquist imaginary row of a
    real-input spectrum) leave ~1e-16 float dust in the analytic gradient
    that the relative denominator would otherwise blow up.
    """
    if eps <= 0:
        raise ValueError("grad_check: eps must be positive")
    x = _as_tensor(x)
    probe = Tensor(x.data.astype(np.float64).copy(), requires_grad=True)
    out = f(probe)
    if not np.all(np.isfinite(out.data)):
        raise FloatingPointError("grad_check: non-finite objective value")
    backward(out)
    analytic = probe.grad if probe.grad is not None else np.zeros_like(probe.data)

    flat = probe.data.reshape(-1)
    numeric = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = float(f(Tensor(probe.data)).data)
        flat[i] = orig - eps
        lo = float(f(Tensor(probe.data)).data)
        flat[i] = orig
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise FloatingPointError("grad_check: non-finite intermediate during probing")
        numeric[i] = (hi - lo) / (2.0 * eps)

    numeric = numeric.reshape(probe.data.shape)
    diff = np.abs(analytic - numeric)
    rel = np.where(diff <= atol, 0.0, diff / (np.abs(numeric) + 1e-12))
    return float(rel.max()) if rel.size else 0.0
