"""KPM feature schema and min-max normalization.

Feature orderings are fixed; downstream event construction relies on them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SimConfig
from .radio import RadioSample

EDGE_FEATURES = ("rsrp", "rsrq", "sinr", "is_serving", "ue_id", "cell_id")

UE_FEATURES = ("dl_throughput", "ul_throughput", "dl_queue_delay", "ul_queue_delay",
               "ul_air_delay", "dl_drop_rate", "dl_prb_usage", "ul_prb_usage",
               "dl_traffic_volume", "ul_traffic_volume", "cqi", "rsrp_serving",
               "sinr_serving", "ue_id")

CELL_FEATURES = ("dl_throughput", "ul_throughput", "prb_usage", "prb_utilization", "cell_id")

EDGE_DIM = len(EDGE_FEATURES)
UE_DIM = len(UE_FEATURES)
CELL_DIM = len(CELL_FEATURES)


@dataclass
class NormRanges:
    """Static min-max ranges; values are clamped into [0, 1]."""
    rsrp: tuple[float, float] = (-140.0, -40.0)
    rsrq: tuple[float, float] = (-30.0, 0.0)
    sinr: tuple[float, float] = (-10.0, 40.0)
    cqi: tuple[float, float] = (0.0, 15.0)
    delay_ms: tuple[float, float] = (0.0, 400.0)
    throughput_mbps: tuple[float, float] = (0.0, 30.0)
    prbs: tuple[float, float] = (0.0, 60.0)
    volume_kb: tuple[float, float] = (0.0, 400.0)
    count: tuple[float, float] = (0.0, 32.0)

    @classmethod
    def for_sim(cls, sim: SimConfig) -> "NormRanges":
        cap_mbps = sim.prb_capacity * sim.prb_bytes * 8.0 / (sim.tti_ms * 1000.0)
        return cls(delay_ms=(0.0, float(sim.drop_deadline_ms)),
                   throughput_mbps=(0.0, max(cap_mbps, 1.0)),
                   prbs=(0.0, float(sim.prb_capacity)),
                   volume_kb=(0.0, max(cap_mbps * sim.kpm_cell_period_ms / 8.0, 1.0)))

    def scale(self, lo_hi: tuple[float, float], value: float) -> float:
        lo, hi = lo_hi
        return float(np.clip((value - lo) / (hi - lo), 0.0, 1.0))


@dataclass
class KpmReport:
    """One emission instant. Edge features appear only on the radio grid;
    UE/cell counters only on the cell-stat grid. Raw radio samples ride along
    for mask evaluation and the A3 rule."""
    timestamp: int
    edge_features: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    ue_features: dict[int, np.ndarray] = field(default_factory=dict)
    cell_features: dict[int, np.ndarray] = field(default_factory=dict)
    radio: dict[int, RadioSample] = field(default_factory=dict)

    @property
    def has_edges(self) -> bool:
        return bool(self.edge_features)


def edge_vector(sample: RadioSample, cell: int, n_ues: int, n_cells: int,
                ranges: NormRanges) -> np.ndarray:
    return np.array([
        ranges.scale(ranges.rsrp, sample.rsrp_dbm[cell]),
        ranges.scale(ranges.rsrq, sample.rsrq_db[cell]),
        ranges.scale(ranges.sinr, sample.sinr_db[cell]),
        1.0 if cell == sample.serving_cell else 0.0,
        sample.ue_id / max(n_ues - 1, 1),
        cell / max(n_cells - 1, 1),
    ])
