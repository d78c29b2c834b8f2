"""Clipped PPO losses and the three-rate shared-encoder update.

The actor and critic groups take Adam steps at their own rates. The encoder
group accumulates the gradient contributions of all three losses, each
pre-scaled by that loss's learning rate, and then takes one plain step, which
reproduces the coupled update rule exactly to first order. An adaptive step
on the encoder would renormalize the three rates away, so it stays plain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import tensor as T
from ..nn.optim import GroupOptimizer, ParamStore
from ..nn.tensor import Tape, backward
from .buffer import RolloutBuffer


@dataclass
class PpoConfig:
    clip_eps: float = 0.2
    value_clip: float = 0.2
    entropy_coef: float = 0.01
    discount: float = 0.99
    gae_lambda: float = 0.95
    epochs: int = 4
    minibatch_size: int = 64
    horizon: int = 128
    max_grad_norm: float = 0.5
    lr_actor: float = 3e-4
    lr_critic: float = 1e-3
    lr_encoder: float = 0.02
    reward_scale: float = 0.05    # keeps value targets O(1); raw regret is logged

    def validate(self):
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError("clip_eps must be in (0, 1)")
        if not 0.0 < self.discount < 1.0:
            raise ValueError("discount must be in (0, 1)")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must be in [0, 1]")
        return self


class TrainingAborted(RuntimeError):
    pass


def make_optimizer(store: ParamStore, cfg: PpoConfig) -> GroupOptimizer:
    # encoder gradients arrive pre-scaled by their loss rates; unit step size
    return GroupOptimizer(store, lr={"actor": cfg.lr_actor,
                                     "critic": cfg.lr_critic,
                                     "encoder": 1.0},
                          plain_groups=("encoder",))


def minibatch_losses(encoder, policy, buffer: RolloutBuffer, step_idx,
                     cfg: PpoConfig, tape, training: bool = False):
    """(actor_loss, critic_loss, tgn_loss) on the given steps of the rollout,
    with embeddings recomputed through the tape from the frozen replays.

    Recomputation runs the encoder deterministically (no dropout): the
    importance ratio must equal one before the first update, which a
    stochastic readout would break."""
    obs_parts, g_parts = [], []
    tgn_terms = []
    masks, allowed, actions, logp_old, v_old, adv, ret = [], [], [], [], [], [], []
    n_agents = len(buffer.agents)
    for si in step_idx:
        step = buffer.steps[si]
        z, g = encoder.embed_all(step.replay, tape, training=training)
        obs_parts.append(T.gather_rows(z, step.agent_nodes, tape))
        g_rows = T.reshape(g, (1, -1), tape)
        for _ in range(n_agents):
            g_parts.append(g_rows)
        link_loss, n_pairs = encoder.link_prediction_loss(
            step.replay, tape,
            z_cache={"z": z, "index": {n: n for n in range(z.shape[0])}})
        if n_pairs:
            tgn_terms.append(link_loss)
        masks.append(step.masks)
        allowed.append(step.ho_allowed)
        actions.append(step.actions)
        logp_old.append(step.log_probs)
        v_old.append(step.values)
        adv.append(buffer.advantages[si])
        ret.append(buffer.returns[si])

    obs = T.concat(obs_parts, axis=0, tape=tape) if len(obs_parts) > 1 else obs_parts[0]
    g_mat = T.concat(g_parts, axis=0, tape=tape) if len(g_parts) > 1 else g_parts[0]
    masks = np.concatenate(masks)
    allowed = np.concatenate(allowed)
    actions = np.concatenate(actions)
    logp_old = np.concatenate(logp_old)
    v_old = np.concatenate(v_old)
    adv = np.concatenate(adv)
    ret = np.concatenate(ret)

    out = policy.actor_forward(obs, masks, allowed, tape)
    logp_new = policy.log_prob(out, actions, tape)
    ratio = T.exp(T.sub(logp_new, T.const(logp_old), tape), tape)
    surr1 = T.mul(ratio, T.const(adv), tape)
    surr2 = T.mul(T.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps, tape),
                  T.const(adv), tape)
    entropy = policy.entropy(out, tape)
    actor_loss = T.sub(T.neg(T.tmean(T.minimum(surr1, surr2, tape), tape=tape), tape),
                       T.mul(T.const(cfg.entropy_coef), T.tmean(entropy, tape=tape), tape),
                       tape)

    v = policy.critic_forward(obs, g_mat, tape)
    v_clipped = T.add(T.const(v_old),
                      T.clip(T.sub(v, T.const(v_old), tape),
                             -cfg.value_clip, cfg.value_clip, tape), tape)
    err = T.sub(v, T.const(ret), tape)
    err_c = T.sub(v_clipped, T.const(ret), tape)
    critic_loss = T.tmean(T.maximum(T.mul(err, err, tape),
                                    T.mul(err_c, err_c, tape), tape), tape=tape)

    if tgn_terms:
        acc = tgn_terms[0]
        for term in tgn_terms[1:]:
            acc = T.add(acc, term, tape)
        tgn_loss = T.mul(acc, T.const(1.0 / len(tgn_terms)), tape)
    else:
        tgn_loss = T.const(0.0)
    return actor_loss, critic_loss, tgn_loss


def update_step(store: ParamStore, optimizer: GroupOptimizer, tape: Tape,
                actor_loss, critic_loss, tgn_loss, cfg: PpoConfig):
    """One coupled update: actor and critic Adam steps at their rates, one
    plain encoder step on the rate-scaled sum of all three gradients."""
    store.zero_grad()
    backward(tape, actor_loss, group_scales={"encoder": cfg.lr_actor})
    backward(tape, critic_loss, group_scales={"encoder": cfg.lr_critic})
    if tgn_loss is not None:
        backward(tape, tgn_loss, group_scales={"encoder": cfg.lr_encoder})
    try:
        optimizer.step("actor", max_grad_norm=cfg.max_grad_norm)
        optimizer.step("critic", max_grad_norm=cfg.max_grad_norm)
        optimizer.step("encoder", max_grad_norm=cfg.max_grad_norm)
    except FloatingPointError as exc:
        raise TrainingAborted(f"epoch aborted: {exc}") from exc
    return float(actor_loss.item()), float(critic_loss.item()), float(tgn_loss.item())
