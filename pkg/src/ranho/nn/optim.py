"""Parameter store with named groups and per-group update rules.

Three groups are used throughout: "encoder", "actor" and "critic". The actor
and critic groups take Adam steps at their own learning rates. The encoder
group is stepped on its raw accumulated gradient (rate 1), because the caller
pre-scales each loss's encoder contribution by that loss's learning rate
before accumulation; an adaptive rule would renormalize those scales away.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .tensor import Parameter


class ParamStore:
    GROUPS = ("encoder", "actor", "critic")

    def __init__(self, seed: int = 0):
        self.params: dict[str, Parameter] = {}
        self.version = 0
        self._rng = np.random.default_rng(seed)

    def create(self, name: str, shape, group: str, init: str = "xavier") -> Parameter:
        if group not in self.GROUPS:
            raise ValueError(f"unknown parameter group {group!r}")
        if name in self.params:
            raise ValueError(f"duplicate parameter name {name!r}")
        shape = tuple(shape)
        if init == "xavier":
            fan_in = shape[0] if len(shape) > 1 else shape[0]
            fan_out = shape[1] if len(shape) > 1 else shape[0]
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            data = self._rng.uniform(-bound, bound, size=shape)
        elif init == "zeros":
            data = np.zeros(shape)
        elif init == "ones":
            data = np.ones(shape)
        elif init == "normal":
            data = self._rng.normal(0.0, 0.1, size=shape)
        else:
            raise ValueError(f"unknown init {init!r}")
        p = Parameter(data, name=name, group=group)
        self.params[name] = p
        return p

    def group(self, group: str) -> list[Parameter]:
        return [p for p in self.params.values() if p.group == group]

    def zero_grad(self, group: str | None = None):
        for p in self.params.values():
            if group is None or p.group == group:
                p.zero_grad()

    def bump(self):
        self.version += 1

    # -- checkpoint format: JSON manifest + packed little-endian float64 blob

    def save(self, path: str | Path):
        path = Path(path)
        entries = []
        offset = 0
        blobs = []
        for name in sorted(self.params):
            p = self.params[name]
            raw = np.ascontiguousarray(p.data, dtype="<f8").tobytes()
            entries.append({"name": name, "group": p.group,
                            "shape": list(p.shape), "offset": offset,
                            "nbytes": len(raw)})
            blobs.append(raw)
            offset += len(raw)
        manifest = {"dtype": "<f8", "params": entries}
        path.with_suffix(".json").write_text(json.dumps(manifest, indent=1))
        path.with_suffix(".bin").write_bytes(b"".join(blobs))

    def load(self, path: str | Path):
        path = Path(path)
        manifest = json.loads(path.with_suffix(".json").read_text())
        blob = path.with_suffix(".bin").read_bytes()
        for entry in manifest["params"]:
            name = entry["name"]
            if name not in self.params:
                raise KeyError(f"checkpoint parameter {name!r} not present in this model")
            p = self.params[name]
            shape = tuple(entry["shape"])
            if p.shape != shape:
                raise ValueError(f"shape mismatch for {name!r}: model {p.shape}, file {shape}")
            raw = blob[entry["offset"]:entry["offset"] + entry["nbytes"]]
            p.data[...] = np.frombuffer(raw, dtype="<f8").reshape(shape)
        self.bump()


def clip_grad_norm(params, max_norm: float) -> float:
    """Scale group gradients so their global L2 norm is at most max_norm."""
    total = 0.0
    for p in params:
        total += float((p.grad * p.grad).sum())
    norm = np.sqrt(total)
    if max_norm is not None and norm > max_norm > 0:
        factor = max_norm / (norm + 1e-12)
        for p in params:
            p.grad *= factor
    return norm


class GroupOptimizer:
    """Adam for the actor/critic groups, plain gradient step for the encoder.

    Learning rates are per group. step() consumes the accumulated .grad of
    every parameter in the group and bumps the store version so stale tapes
    are rejected.
    """

    def __init__(self, store: ParamStore, lr: dict[str, float],
                 betas=(0.9, 0.999), eps: float = 1e-8,
                 plain_groups=("encoder",)):
        self.store = store
        self.lr = dict(lr)
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.plain_groups = set(plain_groups)
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self._t: dict[str, int] = {}

    def step(self, group: str, max_grad_norm: float | None = None):
        params = self.store.group(group)
        if max_grad_norm is not None:
            clip_grad_norm(params, max_grad_norm)
        for p in params:
            if not np.all(np.isfinite(p.grad)):
                raise FloatingPointError(
                    f"non-finite gradient in parameter {p.name!r} (group {group})")
        lr = self.lr[group]
        if group in self.plain_groups:
            for p in params:
                p.data -= lr * p.grad
        else:
            t = self._t.get(group, 0) + 1
            self._t[group] = t
            for p in params:
                m = self._m.setdefault(p.name, np.zeros_like(p.data))
                v = self._v.setdefault(p.name, np.zeros_like(p.data))
                m *= self.beta1
                m += (1 - self.beta1) * p.grad
                v *= self.beta2
                v += (1 - self.beta2) * p.grad * p.grad
                mhat = m / (1 - self.beta1 ** t)
                vhat = v / (1 - self.beta2 ** t)
                p.data -= lr * mhat / (np.sqrt(vhat) + self.eps)
        self.store.bump()
