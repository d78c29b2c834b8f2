"""Central-difference verification of tape gradients."""

from __future__ import annotations

import numpy as np

from .optim import ParamStore
from .tensor import Parameter, Tape, backward


def numeric_grad(fn, param: Parameter, h: float = 1e-6) -> np.ndarray:
    """Central differences of the scalar fn() w.r.t. one parameter."""
    g = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        f_plus = float(fn())
        flat[i] = orig - h
        f_minus = float(fn())
        flat[i] = orig
        gflat[i] = (f_plus - f_minus) / (2.0 * h)
    return g


def relative_error(a: np.ndarray, n: np.ndarray, floor: float = 1e-3) -> float:
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom))


def check_gradients(build_loss, store: ParamStore, names=None, h: float = 1e-6) -> float:
    """Compare tape gradients against central differences.

    build_loss(tape) must rebuild the loss from current parameter values.
    Returns the worst relative error across the checked parameters.
    """
    tape = Tape(store)
    loss = build_loss(tape)
    store.zero_grad()
    backward(tape, loss)
    if names is None:
        names = sorted(store.params)
    worst = 0.0
    for name in names:
        p = store.params[name]
        analytic = p.grad.copy()
        numeric = numeric_grad(lambda: build_loss(None).item(), p, h=h)
        worst = max(worst, relative_error(analytic, numeric))
    return worst
