"""Network building blocks on top of the tape: linear/MLP, GRU cell, attention."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .optim import ParamStore
from .tensor import ContractError, Tensor


class Linear:
    def __init__(self, store: ParamStore, name: str, d_in: int, d_out: int, group: str):
        self.w = store.create(f"{name}.w", (d_in, d_out), group)
        self.b = store.create(f"{name}.b", (d_out,), group, init="zeros")
        self.d_in = d_in
        self.d_out = d_out

    def __call__(self, x, tape=None):
        return T.add(T.matmul(x, self.w, tape), self.b, tape)


class LayerNorm:
    def __init__(self, store: ParamStore, name: str, dim: int, group: str):
        self.gain = store.create(f"{name}.gain", (dim,), group, init="ones")
        self.bias = store.create(f"{name}.bias", (dim,), group, init="zeros")

    def __call__(self, x, tape=None):
        return T.layer_norm(x, self.gain, self.bias, tape=tape)


class Mlp:
    """Stack of Linear -> LayerNorm -> ReLU blocks with a linear output head."""

    def __init__(self, store: ParamStore, name: str, sizes, group: str,
                 norm_hidden: bool = True):
        self.blocks = []
        for i in range(len(sizes) - 2):
            lin = Linear(store, f"{name}.h{i}", sizes[i], sizes[i + 1], group)
            ln = LayerNorm(store, f"{name}.ln{i}", sizes[i + 1], group) if norm_hidden else None
            self.blocks.append((lin, ln))
        self.head = Linear(store, f"{name}.out", sizes[-2], sizes[-1], group)

    def __call__(self, x, tape=None):
        for lin, ln in self.blocks:
            x = lin(x, tape)
            if ln is not None:
                x = ln(x, tape)
            x = T.relu(x, tape)
        return self.head(x, tape)


class GruCell:
    """Gated recurrent unit. Convention: update gate z=0 keeps the previous
    state, z=1 replaces it with the candidate."""

    def __init__(self, store: ParamStore, name: str, d_in: int, d_hidden: int, group: str):
        self.d_in = d_in
        self.d_hidden = d_hidden
        self.wi = store.create(f"{name}.wi", (d_in, 3 * d_hidden), group)
        self.wh = store.create(f"{name}.wh", (d_hidden, 3 * d_hidden), group)
        self.bi = store.create(f"{name}.bi", (3 * d_hidden,), group, init="zeros")
        self.bh = store.create(f"{name}.bh", (3 * d_hidden,), group, init="zeros")

    def __call__(self, msg, h_prev, tape=None):
        msg = T.const(msg) if not isinstance(msg, Tensor) else msg
        h_prev = T.const(h_prev) if not isinstance(h_prev, Tensor) else h_prev
        if msg.shape[-1] != self.d_in or h_prev.shape[-1] != self.d_hidden:
            raise ContractError(
                f"gru shapes: msg {msg.shape} (want last dim {self.d_in}), "
                f"h {h_prev.shape} (want last dim {self.d_hidden})")
        gi = T.add(T.matmul(msg, self.wi, tape), self.bi, tape)
        gh = T.add(T.matmul(h_prev, self.wh, tape), self.bh, tape)
        H = self.d_hidden
        z = T.sigmoid(T.add(T.slice_cols(gi, 0, H, tape), T.slice_cols(gh, 0, H, tape), tape), tape)
        r = T.sigmoid(T.add(T.slice_cols(gi, H, 2 * H, tape), T.slice_cols(gh, H, 2 * H, tape), tape), tape)
        n = T.tanh(T.add(T.slice_cols(gi, 2 * H, 3 * H, tape),
                         T.mul(r, T.slice_cols(gh, 2 * H, 3 * H, tape), tape), tape), tape)
        one = T.const(1.0)
        return T.add(T.mul(T.sub(one, z, tape), h_prev, tape), T.mul(z, n, tape), tape)


class MultiHeadAttention:
    """Scaled dot-product attention over per-row neighbor blocks.

    q: (B, d_q), kv: (B, G, d_kv), valid: (B, G) bool. Rows must have at least
    one valid neighbor; the no-neighbor case is the caller's short circuit.
    """

    def __init__(self, store: ParamStore, name: str, d_q: int, d_kv: int,
                 d_model: int, n_heads: int, group: str, dropout: float = 0.0):
        if d_model % n_heads != 0:
            raise ContractError(f"n_heads {n_heads} must divide d_model {d_model}")
        self.n_heads = n_heads
        self.d_model = d_model
        self.d_head = d_model // n_heads
        self.dropout = dropout
        self.wq = Linear(store, f"{name}.q", d_q, d_model, group)
        self.wk = Linear(store, f"{name}.k", d_kv, d_model, group)
        self.wv = Linear(store, f"{name}.v", d_kv, d_model, group)
        self.wo = Linear(store, f"{name}.o", d_model, d_model, group)

    def __call__(self, q, kv, valid, tape=None, training: bool = False,
                 rng: np.random.Generator | None = None):
        q = T.const(q) if not isinstance(q, Tensor) else q
        kv = T.const(kv) if not isinstance(kv, Tensor) else kv
        valid = np.asarray(valid, dtype=bool)
        B, G, _ = kv.shape
        if q.shape[0] != B or valid.shape != (B, G):
            raise ContractError(f"attention shapes: q {q.shape}, kv {kv.shape}, valid {valid.shape}")
        if not valid.any(axis=1).all():
            raise ContractError("attention row with zero valid neighbors")
        qp = self.wq(q, tape)                                   # (B, dm)
        kv_flat = T.reshape(kv, (B * G, kv.shape[2]), tape)
        kp = T.reshape(self.wk(kv_flat, tape), (B, G, self.d_model), tape)
        vp = T.reshape(self.wv(kv_flat, tape), (B, G, self.d_model), tape)
        neg = np.where(valid, 0.0, -1e30)
        heads = []
        for h in range(self.n_heads):
            lo, hi = h * self.d_head, (h + 1) * self.d_head
            qh = T.slice_cols(qp, lo, hi, tape)
            kh = T.slice_cols(kp, lo, hi, tape)
            vh = T.slice_cols(vp, lo, hi, tape)
            scores = T.attn_scores(qh, kh, tape)
            scores = T.mul(scores, T.const(1.0 / np.sqrt(self.d_head)), tape)
            scores = T.add(scores, T.const(neg), tape)
            w = T.softmax(scores, tape)
            if training and self.dropout > 0.0 and rng is not None:
                w = T.dropout(w, self.dropout, rng, training, tape)
            heads.append(T.attn_mix(w, vh, tape))
        mixed = T.concat(heads, axis=-1, tape=tape) if len(heads) > 1 else heads[0]
        return self.wo(mixed, tape)


class TimeEncoder:
    """Fixed sinusoidal features of log-scaled elapsed time (not learned)."""

    def __init__(self, dim: int = 8, max_period: float = 1.0e5):
        if dim % 2 != 0:
            raise ContractError("time encoder dim must be even")
        k = dim // 2
        self.freqs = 1.0 / np.logspace(0, np.log10(max_period), k)
        self.dim = dim

    def __call__(self, dt_ms) -> np.ndarray:
        dt = np.log1p(np.maximum(np.asarray(dt_ms, dtype=np.float64), 0.0))
        ang = np.multiply.outer(dt, self.freqs * 2.0 * np.pi)
        out = np.concatenate([np.sin(ang), np.cos(ang)], axis=-1)
        return out
