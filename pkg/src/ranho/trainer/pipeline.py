"""The per-decision-step control pipeline shared by training and evaluation:
ingest KPM, embed, mask, sample, reserve and hand over."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..policy.actor_critic import MaskedActorCritic
from ..policy.masks import compute_masks
from ..sim.config import MaskConfig, ReservationConfig
from ..sim.world import IDLE, IntervalStats, ReservationRequest, WorldState
from ..tgn.events import build_events


@dataclass
class DecisionTraceRow:
    t: int
    ue_id: int
    mask_bits: np.ndarray
    p_ho: float
    target_probs: np.ndarray
    action_ho: int
    action_target: int


@dataclass
class ActResult:
    replay: object
    agent_nodes: np.ndarray
    masks: np.ndarray
    ho_allowed: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    obs: np.ndarray
    graph: np.ndarray
    veto_violations: int        # sampled actions that break the true mask
    overloaded_picks: int       # executed handovers into cells above threshold


class LearnedAgentPipeline:
    """Drives one shared encoder and one shared policy for a set of UE agents."""

    def __init__(self, encoder, policy: MaskedActorCritic, agent_ids: list[int],
                 n_ues: int, mask_cfg: MaskConfig, reservation_cfg: ReservationConfig,
                 rng: np.random.Generator, use_mask: bool = True,
                 trace: list | None = None):
        self.encoder = encoder
        self.policy = policy
        self.agent_ids = list(agent_ids)
        self.n_ues = n_ues
        self.mask_cfg = mask_cfg
        self.reservation_cfg = reservation_cfg
        self.rng = rng
        self.use_mask = use_mask
        self.trace = trace
        self.veto_violations = 0
        self.overloaded_picks = 0

    def ingest(self, stats: IntervalStats):
        edges, nodes = build_events(stats.reports, self.n_ues)
        pairs = self.encoder.ingest(edges, nodes)
        return self.encoder.sample_link_pairs(pairs)

    def act(self, world: WorldState, link_pairs) -> ActResult:
        """Embed the current graph state, sample masked actions and apply them."""
        replay = self.encoder.snapshot(world.now, link_pairs)
        z, g = self.encoder.embed_all(replay, tape=None)
        loads = world.cell_loads()
        etas = self.mask_cfg.thresholds(world.n_cells)

        A = len(self.agent_ids)
        C = world.n_cells
        true_masks = np.zeros((A, C))
        applied_masks = np.zeros((A, C))
        allowed = np.zeros(A)
        radios = {}
        for k, ue_id in enumerate(self.agent_ids):
            ue = world.ues[ue_id]
            radio = world.radio_sample(ue_id)
            radios[ue_id] = radio
            m = compute_masks(ue.serving_cell, ue.ho_state == IDLE, radio, loads,
                              self.mask_cfg)
            true_masks[k] = m.target
            if self.use_mask:
                applied_masks[k] = m.target
                allowed[k] = 1.0 if m.ho_allowed else 0.0
            else:
                applied_masks[k] = 1.0
                applied_masks[k, ue.serving_cell] = 0.0
                allowed[k] = 1.0 if ue.ho_state == IDLE else 0.0

        agent_nodes = np.array(self.agent_ids)
        obs = z.data[agent_nodes]
        g_rows = np.tile(g.data[None, :], (A, 1))
        out = self.policy.actor_forward(obs, applied_masks, allowed)
        actions = self.policy.sample(out, self.rng)
        log_probs = self.policy.log_prob(out, actions).data
        values = self.policy.critic_forward(obs, g_rows).data

        veto = 0
        overloaded = 0
        for k, ue_id in enumerate(self.agent_ids):
            a_ho, a_tgt = int(actions[k, 0]), int(actions[k, 1])
            if self.trace is not None:
                self.trace.append(DecisionTraceRow(
                    t=world.now, ue_id=ue_id, mask_bits=true_masks[k].copy(),
                    p_ho=float(out.p_ho.data[k, 1]),
                    target_probs=out.p_target.data[k].copy(),
                    action_ho=a_ho, action_target=a_tgt))
            if a_ho != 1:
                continue
            if true_masks[k, a_tgt] == 0.0:
                veto += 1
            if loads[a_tgt] > etas[a_tgt]:
                overloaded += 1
            ue = world.ues[ue_id]
            req = ReservationRequest(
                ue_id=ue_id,
                serving_prb_usage=max(ue.prb_usage_ema, 1.0),
                kappa=self.reservation_cfg.kappa,
                expiry_ms=world.now + self.reservation_cfg.expiry_ms)
            world.request_handover(ue_id, a_tgt, req)
        self.veto_violations += veto
        self.overloaded_picks += overloaded
        return ActResult(replay=replay, agent_nodes=agent_nodes, masks=applied_masks,
                         ho_allowed=allowed, actions=actions, log_probs=log_probs,
                         values=values, obs=obs, graph=g_rows,
                         veto_violations=veto, overloaded_picks=overloaded)

    def bootstrap_values(self, world: WorldState) -> np.ndarray:
        replay = self.encoder.snapshot(world.now)
        z, g = self.encoder.embed_all(replay, tape=None)
        obs = z.data[np.array(self.agent_ids)]
        g_rows = np.tile(g.data[None, :], (len(self.agent_ids), 1))
        return self.policy.critic_forward(obs, g_rows).data


def interval_rewards(stats: IntervalStats, agent_ids, requirements) -> np.ndarray:
    from ..policy.reward import compute_reward
    out = np.zeros(len(agent_ids))
    for k, ue_id in enumerate(agent_ids):
        rec = compute_reward(stats.hol_ul_mean[ue_id], stats.hol_dl_mean[ue_id],
                             requirements[ue_id])
        out[k] = rec.reward
    return out
