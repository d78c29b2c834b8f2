"""Online training: alternate rollout collection against the simulator with
PPO epochs over the frozen rollout."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..nn.optim import ParamStore
from ..nn.tensor import Tape
from ..policy.actor_critic import MaskedActorCritic
from ..sim.config import ScenarioConfig
from ..sim.world import WorldState
from ..tgn.encoder import EncoderConfig, TemporalGraphEncoder
from ..tgn.snapshot import SnapshotEncoder
from .buffer import RolloutBuffer, StepRecord
from .pipeline import LearnedAgentPipeline, interval_rewards
from .ppo import PpoConfig, make_optimizer, minibatch_losses, update_step


@dataclass
class TrainVariant:
    encoder: str = "tgn"          # tgn | snapshot
    use_mask: bool = True

    @property
    def name(self) -> str:
        tag = "tgn" if self.encoder == "tgn" else "snapshot"
        return f"{tag}-{'mask' if self.use_mask else 'nomask'}"


@dataclass
class ModelBundle:
    store: ParamStore
    encoder: object
    policy: MaskedActorCritic
    encoder_kind: str
    n_ues: int
    n_cells: int


@dataclass
class TrainResult:
    bundle: ModelBundle
    metrics: list[dict] = field(default_factory=list)
    checkpoint: Path | None = None


def build_models(n_ues: int, n_cells: int, encoder_kind: str, seed: int,
                 encoder_cfg: EncoderConfig | None = None) -> ModelBundle:
    ss = np.random.SeedSequence(seed)
    init_seed, enc_seed = ss.spawn(2)
    store = ParamStore(seed=int(init_seed.generate_state(1)[0]))
    enc_rng = np.random.default_rng(enc_seed)
    if encoder_kind == "tgn":
        encoder = TemporalGraphEncoder(store, n_ues, n_cells,
                                       encoder_cfg or EncoderConfig(), rng=enc_rng)
    elif encoder_kind == "snapshot":
        encoder = SnapshotEncoder(store, n_ues, n_cells, rng=enc_rng)
    else:
        raise ValueError(f"unknown encoder kind {encoder_kind!r}")
    policy = MaskedActorCritic(store, n_cells)
    return ModelBundle(store=store, encoder=encoder, policy=policy,
                       encoder_kind=encoder_kind, n_ues=n_ues, n_cells=n_cells)


def save_checkpoint(bundle: ModelBundle, path: str | Path):
    path = Path(path)
    bundle.store.save(path)
    meta = {"encoder": bundle.encoder_kind, "n_ues": bundle.n_ues,
            "n_cells": bundle.n_cells}
    path.with_suffix(".meta.json").write_text(json.dumps(meta, indent=1))


def load_checkpoint(path: str | Path, seed: int = 0) -> ModelBundle:
    path = Path(path)
    meta_path = path.with_suffix(".meta.json")
    if not meta_path.exists():
        raise FileNotFoundError(f"checkpoint metadata missing: {meta_path}")
    meta = json.loads(meta_path.read_text())
    bundle = build_models(meta["n_ues"], meta["n_cells"], meta["encoder"], seed)
    bundle.store.load(path)
    return bundle


def collect_rollout(world: WorldState, pipeline: LearnedAgentPipeline,
                    horizon: int, period_ms: int,
                    requirements: dict[int, float],
                    reward_scale: float = 1.0) -> RolloutBuffer:
    """Roll the control loop for `horizon` decision steps. Rewards lag one
    interval behind actions; the final interval and bootstrap value close the
    last transition. Encoder memory persists across calls."""
    buffer = RolloutBuffer(agents=pipeline.agent_ids)
    pending: StepRecord | None = None
    A = len(pipeline.agent_ids)
    for _ in range(horizon):
        stats = world.advance(period_ms)
        link_pairs = pipeline.ingest(stats)
        if pending is not None:
            pending.rewards = reward_scale * interval_rewards(
                stats, pipeline.agent_ids, requirements)
            pending.dones = np.zeros(A)
        act = pipeline.act(world, link_pairs)
        pending = StepRecord(replay=act.replay, agent_nodes=act.agent_nodes,
                             masks=act.masks, ho_allowed=act.ho_allowed,
                             actions=act.actions, log_probs=act.log_probs,
                             values=act.values)
        buffer.steps.append(pending)
    if pending is not None:
        stats = world.advance(period_ms)
        pipeline.ingest(stats)
        pending.rewards = reward_scale * interval_rewards(
            stats, pipeline.agent_ids, requirements)
        pending.dones = np.zeros(A)
        buffer.bootstrap = pipeline.bootstrap_values(world)
    else:
        buffer.bootstrap = np.zeros(A)
    return buffer


def train(scenario: ScenarioConfig, iterations: int, ppo: PpoConfig | None = None,
          variant: TrainVariant | None = None, seed: int = 0,
          out_dir: str | Path | None = None, checkpoint_every: int | None = None,
          encoder_cfg: EncoderConfig | None = None,
          log_fn=None) -> TrainResult:
    ppo = (ppo or PpoConfig()).validate()
    variant = variant or TrainVariant()
    scenario.validate()

    ss = np.random.SeedSequence(seed)
    model_seed, world_seed, sample_seed, shuffle_seed = ss.spawn(4)
    world = WorldState(scenario, seed=int(world_seed.generate_state(1)[0]))
    agents = sorted(u.ue_id for u in scenario.ues
                    if u.controller.startswith("learned"))
    if not agents:
        raise ValueError("scenario has no learned-controller UEs to train")
    requirements = {u.ue_id: u.delay_requirement_ms for u in scenario.ues}

    bundle = build_models(world.n_ues, world.n_cells, variant.encoder,
                          int(model_seed.generate_state(1)[0]), encoder_cfg)
    pipeline = LearnedAgentPipeline(
        bundle.encoder, bundle.policy, agents, world.n_ues,
        scenario.mask, scenario.reservation,
        rng=np.random.default_rng(sample_seed), use_mask=variant.use_mask)
    optimizer = make_optimizer(bundle.store, ppo)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    period = scenario.sim.kpm_radio_period_ms

    result = TrainResult(bundle=bundle)
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        save_checkpoint(bundle, out_dir / "checkpoint_init")
        result.checkpoint = out_dir / "checkpoint_init"

    env_steps = 0
    for it in range(iterations):
        ho_before = world.handover_count
        veto_before = pipeline.veto_violations
        buffer = collect_rollout(world, pipeline, ppo.horizon, period, requirements,
                                 reward_scale=ppo.reward_scale)
        env_steps += len(buffer)
        buffer.finish(ppo.discount, ppo.gae_lambda)

        losses = np.zeros(3)
        n_updates = 0
        for _ in range(ppo.epochs):
            for step_idx in buffer.minibatches(ppo.minibatch_size, shuffle_rng):
                tape = Tape(bundle.store)
                a_l, c_l, t_l = minibatch_losses(bundle.encoder, bundle.policy,
                                                 buffer, step_idx, ppo, tape)
                losses += update_step(bundle.store, optimizer, tape, a_l, c_l, t_l, ppo)
                n_updates += 1
        losses /= max(n_updates, 1)

        rewards = buffer.stack("rewards") / ppo.reward_scale
        row = {
            "iteration": it,
            "env_steps": env_steps,
            "mean_reward": float(rewards.mean()),
            "mean_regret": float(-rewards.mean()),
            "p95_regret": float(np.percentile(-rewards, 95)),
            "handovers": world.handover_count - ho_before,
            "mask_vetoes": pipeline.veto_violations - veto_before,
            "overloaded_picks": pipeline.overloaded_picks,
            "actor_loss": losses[0],
            "critic_loss": losses[1],
            "tgn_loss": losses[2],
        }
        result.metrics.append(row)
        if log_fn is not None:
            log_fn(row)
        if out_dir is not None and checkpoint_every and (it + 1) % checkpoint_every == 0:
            save_checkpoint(bundle, out_dir / f"checkpoint_{it + 1:04d}")
    if out_dir is not None:
        final = out_dir / "checkpoint_final"
        save_checkpoint(bundle, final)
        result.checkpoint = final
    return result
