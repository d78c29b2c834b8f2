"""Rollout storage: per-step frozen encoder inputs plus per-agent transitions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gae import compute_gae, normalize_advantages


@dataclass
class StepRecord:
    replay: object                      # frozen encoder inputs for this step
    agent_nodes: np.ndarray             # (A,) node id per agent
    masks: np.ndarray                   # (A, C) replayed at update time
    ho_allowed: np.ndarray              # (A,)
    actions: np.ndarray                 # (A, 2)
    log_probs: np.ndarray               # (A,)
    values: np.ndarray                  # (A,)
    rewards: np.ndarray | None = None   # (A,) filled one interval later
    dones: np.ndarray | None = None


@dataclass
class RolloutBuffer:
    agents: list[int]
    steps: list[StepRecord] = field(default_factory=list)
    bootstrap: np.ndarray | None = None
    advantages: np.ndarray | None = None   # (T, A)
    returns: np.ndarray | None = None

    def __len__(self):
        return len(self.steps)

    @property
    def n_transitions(self) -> int:
        return len(self.steps) * len(self.agents)

    def stack(self, field_name: str) -> np.ndarray:
        return np.stack([getattr(s, field_name) for s in self.steps])

    def finish(self, gamma: float, lam: float):
        if any(s.rewards is None for s in self.steps):
            raise ValueError("rollout has unfilled rewards")
        rewards = self.stack("rewards")
        values = self.stack("values")
        dones = self.stack("dones")
        adv, ret = compute_gae(rewards, values, dones, self.bootstrap, gamma, lam)
        self.advantages = normalize_advantages(adv)
        self.returns = ret

    def minibatches(self, minibatch_size: int, rng: np.random.Generator):
        """Minibatches at whole-step granularity, shuffled with the given rng."""
        n_agents = max(len(self.agents), 1)
        steps_per_mb = max(minibatch_size // n_agents, 1)
        order = rng.permutation(len(self.steps))
        for lo in range(0, len(order), steps_per_mb):
            yield order[lo:lo + steps_per_mb]
