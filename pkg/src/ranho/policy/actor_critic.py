"""Shared-parameter masked actor and centralized critic.

The action is two categorical heads: a stay/handover bit and a target cell.
The target head is masked and renormalized; when no target is valid (or the
UE is mid-handover) the stay bit is forced with probability one and the
target head contributes nothing to log-probabilities or gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import tensor as T
from ..nn.layers import LayerNorm, Linear, Mlp
from ..nn.optim import ParamStore


@dataclass
class PolicyOutput:
    p_ho: T.Tensor              # (B, 2) stay/go probabilities
    p_target: T.Tensor          # (B, C) masked renormalized target probabilities
    p_target_raw: T.Tensor      # (B, C) unmasked softmax (diagnostics, ablation)


class MaskedActorCritic:
    STAY_BIAS = 2.0     # initial log-odds toward keeping the serving cell

    def __init__(self, store: ParamStore, n_cells: int, obs_dim: int = 32,
                 hidden: int = 64):
        self.n_cells = n_cells
        self.obs_dim = obs_dim
        self.l1 = Linear(store, "pi.h0", obs_dim, hidden, "actor")
        self.n1 = LayerNorm(store, "pi.ln0", hidden, "actor")
        self.l2 = Linear(store, "pi.h1", hidden, hidden, "actor")
        self.n2 = LayerNorm(store, "pi.ln1", hidden, "actor")
        self.head_ho = Linear(store, "pi.ho", hidden, 2, "actor")
        self.head_ho.b.data[...] = [self.STAY_BIAS / 2, -self.STAY_BIAS / 2]
        self.head_target = Linear(store, "pi.target", hidden, n_cells, "actor")
        self.vf = Mlp(store, "vf", (2 * obs_dim, hidden, hidden, 1), "critic")

    # ------------------------------------------------------------------

    def actor_forward(self, obs, target_mask: np.ndarray, ho_allowed: np.ndarray,
                      tape=None) -> PolicyOutput:
        """obs (B, obs_dim); target_mask (B, C) in {0,1}; ho_allowed (B,) in {0,1}."""
        obs = T.const(obs) if not isinstance(obs, T.Tensor) else obs
        mask = np.asarray(target_mask, dtype=np.float64)
        allowed = np.asarray(ho_allowed, dtype=np.float64).reshape(-1, 1)

        x = T.relu(self.n1(self.l1(obs, tape), tape), tape)
        x = T.relu(self.n2(self.l2(x, tape), tape), tape)

        ho_net = T.softmax(self.head_ho(x, tape), tape)
        forced = np.tile(np.array([[1.0, 0.0]]), (mask.shape[0], 1))
        p_ho = T.add(T.mul(ho_net, T.const(allowed), tape),
                     T.const((1.0 - allowed) * forced), tape)

        raw = T.softmax(self.head_target(x, tape), tape)
        valid_any = (mask.sum(axis=1) > 0).astype(float).reshape(-1, 1)
        numer = T.mul(raw, T.const(mask), tape)
        denom = T.add(T.tsum(numer, axis=-1, keepdims=True, tape=tape),
                      T.const(1.0 - valid_any), tape)
        p_target = T.div(numer, denom, tape)
        return PolicyOutput(p_ho=p_ho, p_target=p_target, p_target_raw=raw)

    def log_prob(self, out: PolicyOutput, actions: np.ndarray, tape=None):
        """Joint log-probability of (stay/go, target) pairs; the target term
        only counts when the handover bit is 1."""
        a_ho = actions[:, 0].astype(np.int64)
        a_tgt = actions[:, 1].astype(np.int64)
        lp_ho = T.log(T.take_per_row(out.p_ho, a_ho, tape), tape)
        # keep the target log finite on rows where it will be zeroed out
        safe = out.p_target.data[np.arange(len(a_tgt)), a_tgt] <= 0.0
        p_t = T.add(T.take_per_row(out.p_target, a_tgt, tape),
                    T.const(safe.astype(float)), tape)
        lp_t = T.mul(T.log(p_t, tape), T.const(a_ho.astype(float)), tape)
        return T.add(lp_ho, lp_t, tape)

    def entropy(self, out: PolicyOutput, tape=None):
        """Entropy of the factorized masked joint distribution, per row."""
        h_ho = self._plogp_entropy(out.p_ho, tape)
        h_t = self._plogp_entropy(out.p_target, tape)
        p_go = T.take_per_row(out.p_ho, np.ones(out.p_ho.shape[0], np.int64), tape)
        return T.add(h_ho, T.mul(p_go, h_t, tape), tape)

    @staticmethod
    def _plogp_entropy(p, tape=None):
        zero = (p.data <= 0.0).astype(float)
        logp = T.log(T.add(p, T.const(zero), tape), tape)
        return T.neg(T.tsum(T.mul(p, logp, tape), axis=-1, tape=tape), tape)

    def sample(self, out: PolicyOutput, rng: np.random.Generator) -> np.ndarray:
        """(B, 2) integer actions: column 0 the handover bit, column 1 the target."""
        p_ho = out.p_ho.data
        p_t = out.p_target.data
        B = p_ho.shape[0]
        actions = np.zeros((B, 2), dtype=np.int64)
        for b in range(B):
            u = rng.random()
            actions[b, 0] = int(u >= p_ho[b, 0])
            row = p_t[b]
            total = row.sum()
            if total <= 0.0:
                actions[b, 1] = 0
                continue
            cum = np.cumsum(row)
            v = rng.random() * cum[-1]
            actions[b, 1] = int(np.searchsorted(cum, v, side="right"))
        return actions

    # ------------------------------------------------------------------

    def critic_forward(self, obs, graph, tape=None):
        """V([z_i, g]) with a linear head; returns (B,)."""
        obs = T.const(obs) if not isinstance(obs, T.Tensor) else obs
        graph = T.const(graph) if not isinstance(graph, T.Tensor) else graph
        x = T.concat([obs, graph], axis=1, tape=tape)
        return T.reshape(self.vf(x, tape), (-1,), tape)
