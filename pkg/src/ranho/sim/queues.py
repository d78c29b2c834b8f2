"""Per-UE FIFO queues with age-based discard, plus traffic generators."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .config import TrafficProfile


@dataclass
class Packet:
    arrival_ms: int
    size_bytes: int
    remaining: float


@dataclass
class QueueState:
    drop_deadline_ms: int
    packets: deque = field(default_factory=deque)
    drop_count: int = 0
    dropped_bytes: float = 0.0
    generated_count: int = 0

    def push(self, now: int, size_bytes: int):
        self.packets.append(Packet(now, size_bytes, float(size_bytes)))
        self.generated_count += 1

    def head_of_line_delay(self, now: int) -> int:
        if not self.packets:
            return 0
        return now - self.packets[0].arrival_ms

    def backlog_bytes(self) -> float:
        return sum(p.remaining for p in self.packets)

    def drop_expired(self, now: int) -> int:
        """Discard packets older than the deadline; returns how many."""
        dropped = 0
        while self.packets and now - self.packets[0].arrival_ms > self.drop_deadline_ms:
            p = self.packets.popleft()
            self.drop_count += 1
            self.dropped_bytes += p.remaining
            dropped += 1
        return dropped

    def serve(self, now: int, byte_budget: float):
        """Drain the head of the queue into (packet, queue_delay) completions.

        Partially served packets keep their residual bytes. Returns
        (completions, bytes_consumed).
        """
        done = []
        used = 0.0
        while self.packets and byte_budget > 1e-9:
            head = self.packets[0]
            take = min(head.remaining, byte_budget)
            head.remaining -= take
            byte_budget -= take
            used += take
            if head.remaining <= 1e-9:
                self.packets.popleft()
                done.append((head, now - head.arrival_ms))
        return done, used


class TrafficSource:
    """Deterministic (seeded) arrival process for one UE direction."""

    def __init__(self, kind: str, rate_mbps: float, packet_bytes: int,
                 burst_rate_hz: float, burst_bytes: int, rng: np.random.Generator):
        self.kind = kind
        self.bytes_per_ms = rate_mbps * 125.0        # 1 Mbps = 125 bytes/ms
        self.packet_bytes = packet_bytes
        self.burst_rate_hz = burst_rate_hz
        self.burst_bytes = burst_bytes
        self.rng = rng
        self._carry = 0.0
        self._next_burst_ms = None

    def arrivals(self, now: int, tti_ms: int) -> list[int]:
        """Packet sizes arriving during [now, now + tti)."""
        sizes = []
        if self.kind == "persistent":
            self._carry += self.bytes_per_ms * tti_ms
            while self._carry >= self.packet_bytes:
                sizes.append(self.packet_bytes)
                self._carry -= self.packet_bytes
        else:
            if self.bytes_per_ms > 0 and self.burst_rate_hz > 0:
                if self._next_burst_ms is None:
                    self._next_burst_ms = now + self.rng.exponential(1000.0 / self.burst_rate_hz)
                while self._next_burst_ms < now + tti_ms:
                    remaining = self.burst_bytes
                    while remaining > 0:
                        sizes.append(min(self.packet_bytes, remaining))
                        remaining -= self.packet_bytes
                    self._next_burst_ms += self.rng.exponential(1000.0 / self.burst_rate_hz)
        return sizes


def make_sources(profile: TrafficProfile, rng: np.random.Generator):
    """(downlink, uplink) traffic sources for one UE."""
    dl = TrafficSource(profile.kind, profile.dl_rate_mbps, profile.packet_bytes,
                       profile.burst_rate_hz, profile.burst_bytes, rng)
    ul = TrafficSource(profile.kind, profile.ul_rate_mbps, profile.packet_bytes,
                       profile.burst_rate_hz, profile.burst_bytes, rng)
    return dl, ul
