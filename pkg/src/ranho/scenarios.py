"""Canned scenario builders used by tests, scripts and the CLI."""

from __future__ import annotations

from .sim.config import (A3Config, MaskConfig, RadioConfig, ReservationConfig,
                         RlfConfig, ScenarioConfig, SimConfig, TrafficProfile,
                         UeConfig)


def quiescent_2cell(seed: int = 0) -> ScenarioConfig:
    """Two cells, one parked UE, zero traffic."""
    sim = SimConfig(n_cells=2, cell_positions=[(0.0, 0.0), (80.0, 0.0)], seed=seed)
    ue = UeConfig(ue_id=0, position=(10.0, 0.0), velocity=(0.0, 0.0),
                  traffic=TrafficProfile(dl_rate_mbps=0.0, ul_rate_mbps=0.0),
                  controller="static")
    return ScenarioConfig(sim=sim, ues=[ue]).validate()


def crossing_2cell(seed: int = 0, *, speed_mps: float = 3.0,
                   agent_dl_mbps: float = 2.0, agent_ul_mbps: float = 1.0,
                   target_bg_ues: int = 3, target_bg_mbps: float = 2.6,
                   interruption_ms: int = 100,
                   record: bool = False) -> ScenarioConfig:
    """One UE walking from cell 0 into cell 1, with static background load
    parked on the target cell so post-handover contention is real."""
    sim = SimConfig(
        n_cells=2, cell_positions=[(0.0, 0.0), (80.0, 0.0)],
        handover_interruption_ms=interruption_ms,
        area=(-40.0, -40.0, 120.0, 40.0),
        record_delay_trace=record, record_packets=record, seed=seed)
    ues = [UeConfig(
        ue_id=0, position=(8.0, 0.0), velocity=(speed_mps, 0.0),
        traffic=TrafficProfile(dl_rate_mbps=agent_dl_mbps, ul_rate_mbps=agent_ul_mbps),
        delay_requirement_ms=40.0, controller="a3")]
    for k in range(target_bg_ues):
        ues.append(UeConfig(
            ue_id=1 + k, position=(76.0 + 4.0 * k, 6.0), velocity=(0.0, 0.0),
            traffic=TrafficProfile(dl_rate_mbps=target_bg_mbps, ul_rate_mbps=0.3),
            delay_requirement_ms=100.0, controller="static", serving_cell=1))
    return ScenarioConfig(sim=sim, ues=ues,
                          mask=MaskConfig(load_threshold=0.95)).validate()


def heavy_3cell(seed: int = 0, *, n_agents: int = 3,
                agent_dl_mbps: float = 1.5, agent_ul_mbps: float = 0.5,
                bg_dl_mbps: float = 4.8, bg_bursty: bool = True,
                record: bool = False) -> ScenarioConfig:
    """Three cells in a row, three walking agents, background near 80% of
    cell capacity (12 Mbps): two background UEs per cell."""
    cell_x = [0.0, 90.0, 180.0]
    sim = SimConfig(
        n_cells=3, cell_positions=[(x, 0.0) for x in cell_x],
        area=(-30.0, -40.0, 210.0, 40.0),
        record_packets=record, record_delay_trace=record, seed=seed)
    ues = []
    starts = [(10.0, 2.0), (170.0, -2.0), (88.0, 4.0)]
    speeds = [(3.5, 0.0), (-3.5, 0.0), (3.0, 0.0)]
    for a in range(n_agents):
        ues.append(UeConfig(
            ue_id=a, position=starts[a % 3], velocity=speeds[a % 3],
            traffic=TrafficProfile(dl_rate_mbps=agent_dl_mbps, ul_rate_mbps=agent_ul_mbps),
            delay_requirement_ms=30.0, controller="learned"))
    uid = n_agents
    kind = "bursty" if bg_bursty else "persistent"
    for j, x in enumerate(cell_x):
        for k in range(2):
            ues.append(UeConfig(
                ue_id=uid, position=(x + 5.0 + 4.0 * k, -6.0), velocity=(0.0, 0.0),
                traffic=TrafficProfile(kind=kind, dl_rate_mbps=bg_dl_mbps,
                                       ul_rate_mbps=0.4, burst_rate_hz=3.0,
                                       burst_bytes=int(bg_dl_mbps * 125 * 330)),
                delay_requirement_ms=200.0, controller="static", serving_cell=j))
            uid += 1
    return ScenarioConfig(
        sim=sim, ues=ues,
        a3=A3Config(hysteresis_db=2.0, time_to_trigger_ms=120),
        mask=MaskConfig(rsrp_threshold_dbm=-100.0, load_threshold=0.9),
        reservation=ReservationConfig(kappa=1.0, expiry_ms=1500)).validate()


def two_target_fork(seed: int = 0, *, congested_dl_mbps: float = 8.5,
                    agent_dl_mbps: float = 3.0) -> ScenarioConfig:
    """An agent walks away from its serving cell toward two equidistant
    candidates; one candidate carries heavy persistent background traffic.
    The loaded candidate stays below the mask threshold, so avoiding it has
    to be learned from the delay reward, not enforced by the mask."""
    sim = SimConfig(
        n_cells=3,
        cell_positions=[(0.0, 0.0), (70.0, 24.0), (70.0, -24.0)],
        area=(5.0, -40.0, 120.0, 40.0), seed=seed)
    ues = [UeConfig(
        ue_id=0, position=(10.0, 0.0), velocity=(4.0, 0.0),
        traffic=TrafficProfile(dl_rate_mbps=agent_dl_mbps, ul_rate_mbps=1.0),
        delay_requirement_ms=30.0, controller="learned")]
    for k in range(2):
        ues.append(UeConfig(
            ue_id=1 + k, position=(66.0 + 8.0 * k, 26.0), velocity=(0.0, 0.0),
            traffic=TrafficProfile(dl_rate_mbps=congested_dl_mbps / 2, ul_rate_mbps=0.2),
            delay_requirement_ms=200.0, controller="static", serving_cell=1))
    return ScenarioConfig(
        sim=sim, ues=ues,
        a3=A3Config(hysteresis_db=2.0, time_to_trigger_ms=0),
        mask=MaskConfig(rsrp_threshold_dbm=-100.0, load_threshold=0.98),
        reservation=ReservationConfig(kappa=1.0, expiry_ms=1500)).validate()


FACTORIES = {
    "quiescent_2cell": quiescent_2cell,
    "crossing_2cell": crossing_2cell,
    "heavy_3cell": heavy_3cell,
    "two_target_fork": two_target_fork,
}
