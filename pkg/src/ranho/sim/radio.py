"""Radio model: log-distance path loss, AR(1) shadowing, derived link metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import RadioConfig


def path_loss_db(distance_m, cfg: RadioConfig):
    d = np.maximum(np.asarray(distance_m, dtype=np.float64), cfg.ref_distance_m)
    return cfg.pl0_db + 10.0 * cfg.path_loss_exp * np.log10(d / cfg.ref_distance_m)


def compute_rsrp(distance_m, shadow_db, cfg: RadioConfig):
    """RSRP in dBm for a given link distance and shadowing state."""
    return cfg.tx_power_dbm - path_loss_db(distance_m, cfg) - shadow_db


class ShadowingField:
    """Temporally correlated shadowing per UE-cell pair.

    AR(1) per step: s' = phi * s + sigma * eps, eps ~ N(0, 1). Initialized
    from the stationary distribution so long-run statistics hold from t=0.
    """

    def __init__(self, n_ues: int, n_cells: int, cfg: RadioConfig, rng: np.random.Generator):
        self.phi = cfg.shadow_phi
        self.sigma = cfg.shadow_innovation_db
        self.rng = rng
        stat_std = self.sigma / np.sqrt(1.0 - self.phi ** 2) if self.phi < 1.0 else self.sigma
        self.state = rng.normal(0.0, stat_std, size=(n_ues, n_cells))

    def step(self):
        self.state = self.phi * self.state + self.sigma * self.rng.normal(size=self.state.shape)
        return self.state


def cqi_from_sinr(sinr_db):
    """Monotone 0..15 map from SINR; coarse by design (no MCS tables)."""
    return np.clip(np.round((np.asarray(sinr_db) + 8.0) / 30.0 * 15.0), 0, 15).astype(int)


def prb_efficiency(sinr_db, cfg: RadioConfig):
    """Fraction of the nominal per-PRB byte budget carried at this SINR."""
    lin = np.power(10.0, np.asarray(sinr_db, dtype=np.float64) / 10.0)
    ref = np.power(10.0, cfg.sinr_ref_db / 10.0)
    return np.clip(np.log2(1.0 + lin) / np.log2(1.0 + ref), 0.0, 1.0)


@dataclass
class RadioSample:
    """Per-UE measurement report: entries only for detected cells."""
    ue_id: int
    timestamp: int
    serving_cell: int
    rsrp_dbm: dict[int, float] = field(default_factory=dict)
    rsrq_db: dict[int, float] = field(default_factory=dict)
    sinr_db: dict[int, float] = field(default_factory=dict)
    cqi: int = 0

    @property
    def neighbor_cells(self) -> list[int]:
        return [c for c in sorted(self.rsrp_dbm) if c != self.serving_cell]


class RadioEnvironment:
    """Vectorized RSRP/RSRQ/SINR over all UE-cell pairs, refreshed per TTI."""

    def __init__(self, cell_positions: np.ndarray, n_ues: int, cfg: RadioConfig,
                 rng: np.random.Generator):
        self.cfg = cfg
        self.cell_positions = np.asarray(cell_positions, dtype=np.float64)
        self.n_cells = len(cell_positions)
        self.n_ues = n_ues
        self.shadowing = ShadowingField(n_ues, self.n_cells, cfg, rng)
        self.rsrp = np.zeros((n_ues, self.n_cells))
        self.rsrq = np.zeros((n_ues, self.n_cells))
        self.sinr = np.zeros((n_ues, self.n_cells))

    def refresh(self, ue_positions: np.ndarray, cell_activity: np.ndarray):
        """Advance shadowing one step and recompute link metrics.

        cell_activity in [0, 1] scales each cell's contribution to interference
        (an idle cell radiates reference signals only; approximated as its load).
        """
        shadow = self.shadowing.step()
        diff = ue_positions[:, None, :] - self.cell_positions[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        self.rsrp = compute_rsrp(dist, shadow, self.cfg)
        lin = np.power(10.0, self.rsrp / 10.0)
        noise = 10.0 ** (self.cfg.noise_dbm / 10.0)
        act = np.clip(np.asarray(cell_activity, dtype=np.float64), 0.05, 1.0)
        act = act * self.cfg.interference_coupling
        total = lin @ act + noise                               # per UE
        interference = total[:, None] - lin * act[None, :]
        self.sinr = self.rsrp - 10.0 * np.log10(np.maximum(interference, 1e-30))
        rssi = 10.0 * np.log10(np.maximum(total, 1e-30))
        self.rsrq = self.rsrp - rssi[:, None]

    def sample(self, ue_id: int, serving_cell: int, now: int) -> RadioSample:
        """Measurement report with entries for the serving cell and every
        neighbor above the detection threshold."""
        s = RadioSample(ue_id=ue_id, timestamp=now, serving_cell=serving_cell)
        for c in range(self.n_cells):
            if c == serving_cell or self.rsrp[ue_id, c] >= self.cfg.detect_threshold_dbm:
                s.rsrp_dbm[c] = float(self.rsrp[ue_id, c])
                s.rsrq_db[c] = float(self.rsrq[ue_id, c])
                s.sinr_db[c] = float(self.sinr[ue_id, c])
        s.cqi = int(cqi_from_sinr(self.sinr[ue_id, serving_cell]))
        return s
