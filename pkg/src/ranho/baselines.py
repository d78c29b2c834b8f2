"""Handover controllers behind one decision interface.

Rule controllers decide per UE from the latest measurement report; the
learned controller family is driven jointly through the agent pipeline so
experiments can swap controllers without touching simulator code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sim.config import A3Config, RlfConfig, ScenarioConfig
from .sim.handover import evaluate_a3
from .sim.radio import RadioSample
from .sim.world import IDLE, WorldState

RULE_KINDS = ("a3", "nomm", "static")
LEARNED_KINDS = ("learned", "learned_nomask", "learned_snapshot")


@dataclass
class Decision:
    target: int


class A3Controller:
    """3GPP-style trigger; uses the single evaluate_a3 source of truth and
    never reserves resources."""

    def __init__(self, cfg: A3Config):
        self.cfg = cfg

    def decide(self, world: WorldState, ue_id: int, radio: RadioSample,
               period_ms: int):
        ue = world.ues[ue_id]
        target = evaluate_a3(ue.a3_timer, radio, self.cfg, period_ms)
        if target is not None and ue.ho_state == IDLE:
            return Decision(target=target)
        return None


class NoMmController:
    """No mobility management: reattach to the strongest cell only after the
    serving link has stayed below the failure threshold for a full window."""

    def __init__(self, cfg: RlfConfig):
        self.cfg = cfg
        self.low_ms: dict[int, float] = {}

    def decide(self, world: WorldState, ue_id: int, radio: RadioSample,
               period_ms: int):
        serving_rsrp = radio.rsrp_dbm[radio.serving_cell]
        if serving_rsrp < self.cfg.threshold_dbm:
            self.low_ms[ue_id] = self.low_ms.get(ue_id, 0.0) + period_ms
        else:
            self.low_ms[ue_id] = 0.0
        if self.low_ms[ue_id] >= self.cfg.window_ms:
            ue = world.ues[ue_id]
            if ue.ho_state == IDLE:
                strongest = max(radio.rsrp_dbm, key=lambda c: (radio.rsrp_dbm[c], -c))
                if strongest != ue.serving_cell:
                    self.low_ms[ue_id] = 0.0
                    return Decision(target=strongest)
        return None


class StaticController:
    def decide(self, world, ue_id, radio, period_ms):
        return None


def make_controller(kind: str, scenario: ScenarioConfig):
    if kind == "a3":
        return A3Controller(scenario.a3)
    if kind == "nomm":
        return NoMmController(scenario.rlf)
    if kind == "static":
        return StaticController()
    raise ValueError(f"not a rule controller: {kind!r}")


def decide(kind: str, controller, world: WorldState, ue_id: int,
           radio: RadioSample, period_ms: int):
    """Uniform decision call for rule controllers; learned controllers act
    through the shared pipeline instead."""
    if kind not in RULE_KINDS:
        raise ValueError(f"unknown rule controller kind {kind!r}")
    return controller.decide(world, ue_id, radio, period_ms)
