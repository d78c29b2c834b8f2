"""Delay-regret reward: normalized excess of experienced queueing delay over
the UE's delay requirement, negated."""

from __future__ import annotations

from dataclasses import dataclass

from ..sim.config import ConfigError


@dataclass
class DelayRecord:
    tau_ul_ms: float
    tau_dl_ms: float
    requirement_ms: float

    @property
    def tau_ms(self) -> float:
        return self.tau_ul_ms + self.tau_dl_ms

    @property
    def regret(self) -> float:
        return max((self.tau_ms - self.requirement_ms) / self.requirement_ms, 0.0)

    @property
    def reward(self) -> float:
        return -self.regret


def compute_reward(tau_ul_ms: float, tau_dl_ms: float, requirement_ms: float) -> DelayRecord:
    if requirement_ms <= 0:
        raise ConfigError(f"delay requirement must be > 0, got {requirement_ms}")
    return DelayRecord(tau_ul_ms=tau_ul_ms, tau_dl_ms=tau_dl_ms,
                       requirement_ms=requirement_ms)
