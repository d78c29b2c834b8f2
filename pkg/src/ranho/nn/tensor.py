"""Dense float64 tensors with a reverse-mode tape.

Every op takes plain values or Tensors and an optional Tape. With a tape the
op is recorded so that backward() can replay the graph in reverse topological
order; without one the op is forward-only (used during rollout collection,
where gradients are not needed but the arithmetic must match bit for bit).

Gradients accumulate additively into Parameter.grad across backward calls,
which is what lets one shared parameter group receive contributions from
several losses before a single optimizer step.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

import numpy as np


class ContractError(ValueError):
    """Raised when tensor shapes violate an op's contract."""


class StaleTapeError(RuntimeError):
    """Raised when backward runs against parameters updated since the forward pass."""


class Tensor:
    __slots__ = ("data",)

    def __init__(self, data):
        self.data = np.asarray(data, dtype=np.float64)

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return f"Tensor(shape={self.shape})"


class Parameter(Tensor):
    __slots__ = ("name", "group", "grad")

    def __init__(self, data, name: str, group: str):
        super().__init__(data)
        self.name = name
        self.group = group
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Parameter({self.name}, group={self.group}, shape={self.shape})"


class Tape:
    """Execution record of one forward pass.

    Nodes are appended in creation order, which is a topological order of the
    computation graph; backward walks it once in reverse.
    """

    def __init__(self, store=None):
        self.store = store
        self.version = store.version if store is not None else 0
        self._nodes: list[tuple[Tensor, tuple, Callable]] = []

    def record(self, out: Tensor, parents: tuple, backward_fn: Callable):
        self._nodes.append((out, parents, backward_fn))

    def __len__(self):
        return len(self._nodes)


def _coerce(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def const(x) -> Tensor:
    return _coerce(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a gradient back to the shape of a broadcast operand."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _record(tape: Optional[Tape], out: Tensor, parents: tuple, backward_fn: Callable) -> Tensor:
    if tape is not None:
        tape.record(out, parents, backward_fn)
    return out


def backward(tape: Tape, loss: Tensor, scale: float = 1.0,
             group_scales: Optional[dict] = None):
    """Accumulate d(loss)/d(param) into every Parameter reached by the tape.

    scale seeds the output gradient (default 1). group_scales optionally
    multiplies the contribution flowing into parameters of a given group,
    leaving other groups at their raw mathematical gradient.
    """
    if tape.store is not None and tape.store.version != tape.version:
        raise StaleTapeError(
            "parameters were updated after this tape's forward pass; "
            "re-run the forward before calling backward")
    if loss.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.full(loss.shape, float(scale))}
    group_scales = group_scales or {}
    for out, parents, backward_fn in reversed(tape._nodes):
        g = grads.pop(id(out), None)
        if g is None:
            continue
        contribs = backward_fn(g)
        for parent, contrib in zip(parents, contribs):
            if contrib is None:
                continue
            if isinstance(parent, Parameter):
                s = group_scales.get(parent.group, 1.0)
                parent.grad += s * contrib
            else:
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + contrib
                else:
                    grads[key] = contrib
    # loss may itself be a Parameter-free constant; nothing to do then.


# ---------------------------------------------------------------------------
# elementwise arithmetic

def add(a, b, tape=None):
    a, b = _coerce(a), _coerce(b)
    out = Tensor(a.data + b.data)
    def bwd(g):
        return (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape))
    return _record(tape, out, (a, b), bwd)


def sub(a, b, tape=None):
    a, b = _coerce(a), _coerce(b)
    out = Tensor(a.data - b.data)
    def bwd(g):
        return (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape))
    return _record(tape, out, (a, b), bwd)


def mul(a, b, tape=None):
    a, b = _coerce(a), _coerce(b)
    out = Tensor(a.data * b.data)
    ad, bd = a.data, b.data
    def bwd(g):
        return (_unbroadcast(g * bd, a.shape), _unbroadcast(g * ad, b.shape))
    return _record(tape, out, (a, b), bwd)


def div(a, b, tape=None):
    a, b = _coerce(a), _coerce(b)
    out = Tensor(a.data / b.data)
    ad, bd = a.data, b.data
    def bwd(g):
        return (_unbroadcast(g / bd, a.shape),
                _unbroadcast(-g * ad / (bd * bd), b.shape))
    return _record(tape, out, (a, b), bwd)


def neg(a, tape=None):
    a = _coerce(a)
    out = Tensor(-a.data)
    def bwd(g):
        return (-g,)
    return _record(tape, out, (a,), bwd)


def maximum(a, b, tape=None):
    a, b = _coerce(a), _coerce(b)
    out = Tensor(np.maximum(a.data, b.data))
    pick_a = a.data >= b.data  # tie goes to the first operand
    def bwd(g):
        return (_unbroadcast(g * pick_a, a.shape),
                _unbroadcast(g * ~pick_a, b.shape))
    return _record(tape, out, (a, b), bwd)


def minimum(a, b, tape=None):
    a, b = _coerce(a), _coerce(b)
    out = Tensor(np.minimum(a.data, b.data))
    pick_a = a.data <= b.data
    def bwd(g):
        return (_unbroadcast(g * pick_a, a.shape),
                _unbroadcast(g * ~pick_a, b.shape))
    return _record(tape, out, (a, b), bwd)


def clip(a, lo: float, hi: float, tape=None):
    a = _coerce(a)
    out = Tensor(np.clip(a.data, lo, hi))
    inside = (a.data > lo) & (a.data < hi)
    def bwd(g):
        return (g * inside,)
    return _record(tape, out, (a,), bwd)


# ---------------------------------------------------------------------------
# nonlinearities

def relu(a, tape=None):
    a = _coerce(a)
    out = Tensor(np.maximum(a.data, 0.0))
    mask = a.data > 0.0
    def bwd(g):
        return (g * mask,)
    return _record(tape, out, (a,), bwd)


def tanh(a, tape=None):
    a = _coerce(a)
    y = np.tanh(a.data)
    out = Tensor(y)
    def bwd(g):
        return (g * (1.0 - y * y),)
    return _record(tape, out, (a,), bwd)


def sigmoid(a, tape=None):
    a = _coerce(a)
    y = 1.0 / (1.0 + np.exp(-np.clip(a.data, -500, 500)))
    out = Tensor(y)
    def bwd(g):
        return (g * y * (1.0 - y),)
    return _record(tape, out, (a,), bwd)


def exp(a, tape=None):
    a = _coerce(a)
    y = np.exp(a.data)
    out = Tensor(y)
    def bwd(g):
        return (g * y,)
    return _record(tape, out, (a,), bwd)


def log(a, tape=None):
    a = _coerce(a)
    out = Tensor(np.log(a.data))
    ad = a.data
    def bwd(g):
        return (g / ad,)
    return _record(tape, out, (a,), bwd)


def softplus(a, tape=None):
    a = _coerce(a)
    out = Tensor(np.logaddexp(0.0, a.data))
    sig = 1.0 / (1.0 + np.exp(-np.clip(a.data, -500, 500)))
    def bwd(g):
        return (g * sig,)
    return _record(tape, out, (a,), bwd)


# ---------------------------------------------------------------------------
# shape and reduction ops

def reshape(a, shape, tape=None):
    a = _coerce(a)
    out = Tensor(a.data.reshape(shape))
    orig = a.shape
    def bwd(g):
        return (g.reshape(orig),)
    return _record(tape, out, (a,), bwd)


def concat(parts: Sequence, axis: int = -1, tape=None):
    parts = [_coerce(p) for p in parts]
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis))
    sizes = [p.data.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]
    def bwd(g):
        return tuple(np.split(g, splits, axis=axis))
    return _record(tape, out, tuple(parts), bwd)


def slice_cols(a, lo: int, hi: int, tape=None):
    a = _coerce(a)
    out = Tensor(a.data[..., lo:hi])
    shape = a.shape
    def bwd(g):
        full = np.zeros(shape)
        full[..., lo:hi] = g
        return (full,)
    return _record(tape, out, (a,), bwd)


def gather_rows(a, idx, tape=None):
    """Select rows of a 2-D (or leading axis of N-D) tensor by integer index."""
    a = _coerce(a)
    idx = np.asarray(idx, dtype=np.int64)
    out = Tensor(a.data[idx])
    shape = a.shape
    def bwd(g):
        full = np.zeros(shape)
        np.add.at(full, idx, g)
        return (full,)
    return _record(tape, out, (a,), bwd)


def take_per_row(a, idx, tape=None):
    """a[(B, C)], idx[(B,)] -> (B,) picking one column per row."""
    a = _coerce(a)
    idx = np.asarray(idx, dtype=np.int64)
    rows = np.arange(a.shape[0])
    out = Tensor(a.data[rows, idx])
    shape = a.shape
    def bwd(g):
        full = np.zeros(shape)
        full[rows, idx] = g
        return (full,)
    return _record(tape, out, (a,), bwd)


def tsum(a, axis=None, keepdims=False, tape=None):
    a = _coerce(a)
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims))
    shape = a.shape
    def bwd(g):
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg, shape).copy(),)
    return _record(tape, out, (a,), bwd)


def tmean(a, axis=None, keepdims=False, tape=None):
    a = _coerce(a)
    out = Tensor(a.data.mean(axis=axis, keepdims=keepdims))
    shape = a.shape
    if axis is None:
        n = a.size
    else:
        n = shape[axis]
    def bwd(g):
        if axis is None:
            return (np.broadcast_to(g / n, shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg / n, shape).copy(),)
    return _record(tape, out, (a,), bwd)


def mean_pool(a, tape=None):
    """Mean over rows: (N, D) -> (D,)."""
    return tmean(a, axis=0, tape=tape)


# ---------------------------------------------------------------------------
# linear algebra

def matmul(a, w, tape=None):
    a, w = _coerce(a), _coerce(w)
    if a.ndim != 2 or w.ndim != 2 or a.shape[1] != w.shape[0]:
        raise ContractError(f"matmul shape mismatch: {a.shape} @ {w.shape}")
    out = Tensor(a.data @ w.data)
    ad, wd = a.data, w.data
    def bwd(g):
        return (g @ wd.T, ad.T @ g)
    return _record(tape, out, (a, w), bwd)


def softmax(a, tape=None):
    """Row-wise softmax along the last axis."""
    a = _coerce(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(y)
    def bwd(g):
        dot = (g * y).sum(axis=-1, keepdims=True)
        return (y * (g - dot),)
    return _record(tape, out, (a,), bwd)


def layer_norm(a, gain, bias, eps: float = 1e-5, tape=None):
    """Normalize each row to zero mean / unit variance, then scale and shift."""
    a, gain, bias = _coerce(a), _coerce(gain), _coerce(bias)
    if a.shape[-1] != gain.shape[-1] or a.shape[-1] != bias.shape[-1]:
        raise ContractError(
            f"layer_norm shape mismatch: x {a.shape}, gain {gain.shape}, bias {bias.shape}")
    x = a.data
    d = x.shape[-1]
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = Tensor(xhat * gain.data + bias.data)
    gd = gain.data
    def bwd(g):
        dxhat = g * gd
        dvar = (dxhat * xc * (-0.5) * inv ** 3).sum(axis=-1, keepdims=True)
        dmu = (-dxhat * inv).sum(axis=-1, keepdims=True) + dvar * (-2.0 * xc / d).sum(axis=-1, keepdims=True)
        dx = dxhat * inv + dvar * 2.0 * xc / d + dmu / d
        axes = tuple(range(g.ndim - 1))
        dgain = (g * xhat).sum(axis=axes)
        dbias = g.sum(axis=axes)
        return (dx, _unbroadcast(dgain, gain.shape), _unbroadcast(dbias, bias.shape))
    return _record(tape, out, (a, gain, bias), bwd)


# ---------------------------------------------------------------------------
# grouped attention primitives: fixed-size neighbor blocks per query row

def attn_scores(q, k, tape=None):
    """q (B, D), k (B, G, D) -> scores (B, G): per-row dot products."""
    q, k = _coerce(q), _coerce(k)
    if q.ndim != 2 or k.ndim != 3 or q.shape[0] != k.shape[0] or q.shape[1] != k.shape[2]:
        raise ContractError(f"attn_scores shape mismatch: q {q.shape}, k {k.shape}")
    out = Tensor(np.einsum("bd,bgd->bg", q.data, k.data))
    qd, kd = q.data, k.data
    def bwd(g):
        return (np.einsum("bg,bgd->bd", g, kd), np.einsum("bg,bd->bgd", g, qd))
    return _record(tape, out, (q, k), bwd)


def attn_mix(w, v, tape=None):
    """w (B, G), v (B, G, D) -> (B, D): weighted sum of value rows."""
    w, v = _coerce(w), _coerce(v)
    if w.ndim != 2 or v.ndim != 3 or w.shape != v.shape[:2]:
        raise ContractError(f"attn_mix shape mismatch: w {w.shape}, v {v.shape}")
    out = Tensor(np.einsum("bg,bgd->bd", w.data, v.data))
    wd, vd = w.data, v.data
    def bwd(g):
        return (np.einsum("bd,bgd->bg", g, vd), np.einsum("bg,bd->bgd", wd, g))
    return _record(tape, out, (w, v), bwd)


def dropout(a, rate: float, rng: np.random.Generator, training: bool, tape=None):
    if not training or rate <= 0.0:
        return _coerce(a)
    a = _coerce(a)
    keep = (rng.random(a.shape) >= rate) / (1.0 - rate)
    out = Tensor(a.data * keep)
    def bwd(g):
        return (g * keep,)
    return _record(tape, out, (a,), bwd)
