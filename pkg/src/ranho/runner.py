"""Episode evaluation: one world, a mix of rule and learned controllers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baselines import LEARNED_KINDS, RULE_KINDS, make_controller
from .sim.config import ScenarioConfig
from .sim.world import WorldState
from .trainer.loop import ModelBundle
from .trainer.pipeline import LearnedAgentPipeline


@dataclass
class RunMetrics:
    duration_ms: int
    agents: list[int]
    packet_delays: dict[int, np.ndarray] = field(default_factory=dict)
    loss_rate: dict[int, float] = field(default_factory=dict)
    handover_count: int = 0
    mask_vetoes: int = 0
    overloaded_picks: int = 0
    delay_trace: list = field(default_factory=list)
    decision_trace: list = field(default_factory=list)
    embedding_trace: list = field(default_factory=list)   # (ue, t, z vector)
    handover_windows: list = field(default_factory=list)

    def pooled_delays(self, agents=None) -> np.ndarray:
        ids = agents if agents is not None else self.agents
        arrays = [self.packet_delays[u][:, 1] for u in ids
                  if len(self.packet_delays.get(u, []))]
        return np.concatenate(arrays) if arrays else np.array([])

    def pooled_loss_rate(self, agents=None) -> float:
        ids = agents if agents is not None else self.agents
        return float(np.mean([self.loss_rate[u] for u in ids]))


def run_episode(scenario: ScenarioConfig, duration_ms: int, seed: int,
                controllers: dict[int, str] | None = None,
                bundle: ModelBundle | None = None, use_mask: bool = True,
                collect_decision_trace: bool = False,
                collect_embeddings: bool = False) -> RunMetrics:
    """Run the scenario for duration_ms under the given controller map
    (defaults to each UE's configured controller). Learned controllers need a
    trained ModelBundle; sampling stays stochastic under the given seed."""
    scenario = scenario.validate()
    assignment = {u.ue_id: (controllers or {}).get(u.ue_id, u.controller)
                  for u in scenario.ues}
    world = WorldState(scenario, seed=seed)
    period = scenario.sim.kpm_radio_period_ms

    learned_ids = sorted(u for u, kind in assignment.items() if kind in LEARNED_KINDS)
    rule_ids = sorted(u for u, kind in assignment.items() if kind in RULE_KINDS)
    unknown = [u for u, kind in assignment.items()
               if kind not in LEARNED_KINDS and kind not in RULE_KINDS]
    if unknown:
        raise ValueError(f"unknown controller kinds for UEs {unknown}")

    trace_rows = [] if collect_decision_trace else None
    pipeline = None
    if learned_ids:
        if bundle is None:
            raise ValueError("learned controllers require a model bundle")
        kinds = {assignment[u] for u in learned_ids}
        if len(kinds) > 1:
            raise ValueError("one learned variant per run is supported")
        bundle.encoder.reset_state()
        pipeline = LearnedAgentPipeline(
            bundle.encoder, bundle.policy, learned_ids, world.n_ues,
            scenario.mask, scenario.reservation,
            rng=np.random.default_rng(np.random.SeedSequence([seed, 17])),
            use_mask=use_mask and ("nomask" not in next(iter(kinds))),
            trace=trace_rows)
    rule_controllers = {u: make_controller(assignment[u], scenario) for u in rule_ids}

    metrics = RunMetrics(duration_ms=duration_ms,
                         agents=learned_ids + [u for u in rule_ids
                                               if assignment[u] != "static"])
    steps = duration_ms // period
    for _ in range(steps):
        stats = world.advance(period)
        if pipeline is not None:
            link_pairs = pipeline.ingest(stats)
            act = pipeline.act(world, link_pairs)
            if collect_embeddings:
                for k, ue_id in enumerate(learned_ids):
                    metrics.embedding_trace.append((ue_id, world.now, act.obs[k].copy()))
        for ue_id in rule_ids:
            ctrl = rule_controllers[ue_id]
            radio = world.radio_sample(ue_id)
            decision = ctrl.decide(world, ue_id, radio, period)
            if decision is not None:
                world.request_handover(ue_id, decision.target)

    for u in world.packet_delays:
        metrics.packet_delays[u] = np.array(world.packet_delays[u], dtype=float).reshape(-1, 2)
        metrics.loss_rate[u] = world.loss_rate(u)
    metrics.handover_count = world.handover_count
    metrics.handover_windows = list(world.handover_windows)
    metrics.delay_trace = list(world.delay_trace)
    if pipeline is not None:
        metrics.mask_vetoes = pipeline.veto_violations
        metrics.overloaded_picks = pipeline.overloaded_picks
    if trace_rows is not None:
        metrics.decision_trace = trace_rows
    return metrics
