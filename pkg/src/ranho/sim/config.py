"""Scenario configuration: dataclasses, JSON round trip, validation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class RadioConfig:
    tx_power_dbm: float = 23.0
    pl0_db: float = 40.0                 # path loss at the reference distance
    ref_distance_m: float = 1.0
    path_loss_exp: float = 3.0
    shadow_phi: float = 0.95             # AR(1) coefficient per TTI
    shadow_innovation_db: float = 1.0    # AR(1) innovation std; stationary std = sigma/sqrt(1-phi^2)
    noise_dbm: float = -95.0
    detect_threshold_dbm: float = -110.0  # cells below this are absent from reports
    sinr_ref_db: float = 18.0            # SINR at which a PRB carries its full byte budget
    interference_coupling: float = 0.3   # spectral overlap between neighbor cells

    def validate(self):
        if not 0.0 <= self.shadow_phi < 1.0:
            raise ConfigError(f"radio.shadow_phi: must be in [0, 1), got {self.shadow_phi}")
        if self.ref_distance_m <= 0:
            raise ConfigError("radio.ref_distance_m: must be > 0")


@dataclass
class TrafficProfile:
    kind: str = "persistent"             # persistent | bursty
    dl_rate_mbps: float = 2.0
    ul_rate_mbps: float = 1.0
    packet_bytes: int = 1500
    burst_rate_hz: float = 5.0           # bursty only: mean bursts per second
    burst_bytes: int = 30000             # bursty only: bytes per burst

    def validate(self, path: str):
        if self.kind not in ("persistent", "bursty"):
            raise ConfigError(f"{path}.kind: must be persistent or bursty, got {self.kind!r}")
        if self.packet_bytes <= 0:
            raise ConfigError(f"{path}.packet_bytes: must be > 0")
        if self.dl_rate_mbps < 0 or self.ul_rate_mbps < 0:
            raise ConfigError(f"{path}: rates must be >= 0")


@dataclass
class UeConfig:
    ue_id: int = 0
    position: tuple[float, float] = (0.0, 0.0)
    velocity: tuple[float, float] = (0.0, 0.0)
    traffic: TrafficProfile = field(default_factory=TrafficProfile)
    delay_requirement_ms: float = 40.0
    controller: str = "a3"               # a3 | nomm | learned | learned_nomask | learned_snapshot | static
    serving_cell: int | None = None      # default: strongest at t=0

    def validate(self, path: str):
        if self.delay_requirement_ms <= 0:
            raise ConfigError(f"{path}.delay_requirement_ms: must be > 0")
        known = ("a3", "nomm", "learned", "learned_nomask", "learned_snapshot", "static")
        if self.controller not in known:
            raise ConfigError(f"{path}.controller: unknown controller {self.controller!r}")
        self.traffic.validate(f"{path}.traffic")


@dataclass
class A3Config:
    hysteresis_db: float = 3.0
    time_to_trigger_ms: int = 120

    def validate(self):
        if self.hysteresis_db < 0:
            raise ConfigError("a3.hysteresis_db: must be >= 0")
        if self.time_to_trigger_ms < 0:
            raise ConfigError("a3.time_to_trigger_ms: must be >= 0")


@dataclass
class MaskConfig:
    rsrp_threshold_dbm: float = -105.0
    load_threshold: float = 0.85         # broadcast to all cells unless overridden
    load_threshold_per_cell: list[float] | None = None

    def thresholds(self, n_cells: int) -> list[float]:
        if self.load_threshold_per_cell is not None:
            return list(self.load_threshold_per_cell)
        return [self.load_threshold] * n_cells

    def validate(self, n_cells: int):
        for j, eta in enumerate(self.thresholds(n_cells)):
            if not 0.0 < eta <= 1.0:
                raise ConfigError(f"mask.load_threshold[{j}]: must be in (0, 1], got {eta}")
        if self.load_threshold_per_cell is not None and len(self.load_threshold_per_cell) != n_cells:
            raise ConfigError("mask.load_threshold_per_cell: length must equal n_cells")


@dataclass
class ReservationConfig:
    kappa: float = 1.0
    expiry_ms: int = 1000
    overload_kappa: float = 0.5          # replaces kappa when the target is overloaded

    def validate(self):
        if not 0.0 < self.kappa <= 1.0:
            raise ConfigError(f"reservation.kappa: must be in (0, 1], got {self.kappa}")
        if not 0.0 < self.overload_kappa <= 1.0:
            raise ConfigError("reservation.overload_kappa: must be in (0, 1]")
        if self.expiry_ms <= 0:
            raise ConfigError("reservation.expiry_ms: must be > 0")


@dataclass
class RlfConfig:
    threshold_dbm: float = -110.0
    window_ms: int = 500


@dataclass
class SimConfig:
    n_cells: int = 2
    cell_positions: list[tuple[float, float]] = field(default_factory=lambda: [(0.0, 0.0), (80.0, 0.0)])
    prb_capacity: int = 60               # PRBs per cell per TTI
    tti_ms: int = 10
    kpm_radio_period_ms: int = 120
    kpm_cell_period_ms: int = 10
    handover_interruption_ms: int = 80
    phase2_delay_ms: int = 20
    weak_rsrp_penalty_ms: int = 60       # added to the interruption when target RSRP < mask threshold
    drop_deadline_ms: int = 400          # queueing age beyond which packets are discarded
    prb_bytes: float = 250.0             # bytes per PRB at reference SINR
    area: tuple[float, float, float, float] = (-50.0, -50.0, 200.0, 50.0)
    record_events: bool = False
    record_packets: bool = False
    record_delay_trace: bool = False
    seed: int = 0

    def validate(self):
        if self.n_cells < 2:
            raise ConfigError(f"sim.n_cells: must be >= 2, got {self.n_cells}")
        if len(self.cell_positions) != self.n_cells:
            raise ConfigError("sim.cell_positions: length must equal n_cells")
        for name in ("tti_ms", "kpm_radio_period_ms", "kpm_cell_period_ms",
                     "handover_interruption_ms", "drop_deadline_ms"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"sim.{name}: must be > 0")
        if self.kpm_radio_period_ms % self.tti_ms != 0:
            raise ConfigError("sim.kpm_radio_period_ms: must be an integer multiple of tti_ms")
        if self.kpm_cell_period_ms % self.tti_ms != 0:
            raise ConfigError("sim.kpm_cell_period_ms: must be an integer multiple of tti_ms")
        if self.prb_capacity <= 0:
            raise ConfigError("sim.prb_capacity: must be > 0")


@dataclass
class ScenarioConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    a3: A3Config = field(default_factory=A3Config)
    mask: MaskConfig = field(default_factory=MaskConfig)
    reservation: ReservationConfig = field(default_factory=ReservationConfig)
    rlf: RlfConfig = field(default_factory=RlfConfig)
    ues: list[UeConfig] = field(default_factory=list)

    def validate(self):
        self.sim.validate()
        self.radio.validate()
        self.a3.validate()
        self.mask.validate(self.sim.n_cells)
        self.reservation.validate()
        if not self.ues:
            raise ConfigError("ues: at least one UE required")
        seen = set()
        for i, ue in enumerate(self.ues):
            ue.validate(f"ues[{i}]")
            if ue.ue_id in seen:
                raise ConfigError(f"ues[{i}].ue_id: duplicate id {ue.ue_id}")
            seen.add(ue.ue_id)
            if ue.serving_cell is not None and not 0 <= ue.serving_cell < self.sim.n_cells:
                raise ConfigError(f"ues[{i}].serving_cell: out of range")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        def build(dc_type, payload, path):
            if not isinstance(payload, dict):
                raise ConfigError(f"{path}: expected an object, got {type(payload).__name__}")
            fields = {f.name: f for f in dc_type.__dataclass_fields__.values()}
            unknown = set(payload) - set(fields)
            if unknown:
                raise ConfigError(f"{path}: unknown field(s) {sorted(unknown)}")
            kwargs = {}
            for key, value in payload.items():
                if key == "traffic":
                    value = build(TrafficProfile, value, f"{path}.traffic")
                elif key in ("position", "velocity", "area"):
                    value = tuple(value)
                elif key == "cell_positions":
                    value = [tuple(p) for p in value]
                kwargs[key] = value
            try:
                return dc_type(**kwargs)
            except TypeError as exc:
                raise ConfigError(f"{path}: {exc}") from None

        cfg = cls()
        for section, dc_type in (("sim", SimConfig), ("radio", RadioConfig),
                                 ("a3", A3Config), ("mask", MaskConfig),
                                 ("reservation", ReservationConfig), ("rlf", RlfConfig)):
            if section in data:
                setattr(cfg, section, build(dc_type, data[section], section))
        if "ues" in data:
            cfg.ues = [build(UeConfig, u, f"ues[{i}]") for i, u in enumerate(data["ues"])]
        unknown = set(data) - {"sim", "radio", "a3", "mask", "reservation", "rlf", "ues"}
        if unknown:
            raise ConfigError(f"top level: unknown section(s) {sorted(unknown)}")
        return cfg.validate()

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}")
        return cls.from_dict(data)


def config_hash(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
