"""Deterministic TTI-stepped simulation of cells, mobile UEs and handovers.

One WorldState instance is single threaded; run several instances with
different seeds for parallel rollouts. Given (scenario, seed) the event
stream is bit-identical across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, ScenarioConfig
from .kpm import (CELL_DIM, UE_DIM, KpmReport, NormRanges, edge_vector)
from .queues import QueueState, make_sources
from .radio import RadioEnvironment, prb_efficiency
from .scheduler import schedule_prbs

IDLE, PREPARING, INTERRUPTED = "idle", "preparing", "interrupted"


@dataclass
class SimEvent:
    t: int
    kind: str
    ue_id: int = -1
    cell_id: int = -1
    value: float = 0.0


@dataclass
class Reservation:
    prbs: int
    priority: bool
    expiry_ms: int


@dataclass
class ReservationRequest:
    ue_id: int
    serving_prb_usage: float     # recent PRBs per TTI at the serving cell
    kappa: float
    expiry_ms: int


@dataclass
class CellState:
    cell_id: int
    position: tuple[float, float]
    attached: set = field(default_factory=set)
    allocations: dict = field(default_factory=dict)   # ue -> PRBs last TTI
    reserved: dict = field(default_factory=dict)      # ue -> Reservation
    load: float = 0.0
    # interval counters (reset on the cell-stat grid)
    ctr_prbs: float = 0.0
    ctr_dl_bytes: float = 0.0
    ctr_ul_bytes: float = 0.0
    ctr_ttis: int = 0


class UeState:
    def __init__(self, cfg, drop_deadline_ms, rng):
        self.ue_id = cfg.ue_id
        self.velocity = np.asarray(cfg.velocity, dtype=np.float64)
        self.traffic_profile = cfg.traffic
        self.delay_requirement_ms = cfg.delay_requirement_ms
        self.serving_cell = -1
        self.ho_state = IDLE
        self.ho_target = -1
        self.ho_exec_at = 0
        self.ho_started_at = 0
        self.ho_attach_at = 0
        self.a3_timer: dict[int, float] = {}
        self.dl_queue = QueueState(drop_deadline_ms)
        self.ul_queue = QueueState(drop_deadline_ms)
        self.dl_source, self.ul_source = make_sources(cfg.traffic, rng)
        self.prb_usage_ema = 0.0
        self.delivered_total = 0
        # interval counters (reset on the cell-stat grid)
        self.reset_counters()

    def reset_counters(self):
        self.ctr_dl_bytes = 0.0
        self.ctr_ul_bytes = 0.0
        self.ctr_dl_arrived = 0.0
        self.ctr_ul_arrived = 0.0
        self.ctr_dl_drops = 0
        self.ctr_dl_delivered = 0
        self.ctr_dl_prbs = 0.0
        self.ctr_ul_prbs = 0.0
        self.ctr_air_sum = 0.0
        self.ctr_air_cnt = 0
        self.ctr_hol_dl_sum = 0.0
        self.ctr_hol_ul_sum = 0.0
        self.ctr_ttis = 0

    @property
    def servable(self) -> bool:
        return self.ho_state != INTERRUPTED

    def hol(self, now: int) -> tuple[int, int]:
        return self.dl_queue.head_of_line_delay(now), self.ul_queue.head_of_line_delay(now)


@dataclass
class IntervalStats:
    """Aggregates over one advance() window (the controller decision period)."""
    start: int
    end: int
    reports: list = field(default_factory=list)
    hol_dl_mean: dict = field(default_factory=dict)
    hol_ul_mean: dict = field(default_factory=dict)
    hol_max: dict = field(default_factory=dict)
    drops: dict = field(default_factory=dict)
    delivered: dict = field(default_factory=dict)
    handovers: int = 0


class WorldState:
    def __init__(self, scenario: ScenarioConfig, seed: int | None = None):
        scenario.validate()
        self.scenario = scenario
        self.cfg = scenario.sim
        self.seed = self.cfg.seed if seed is None else seed
        ids = sorted(u.ue_id for u in scenario.ues)
        if ids != list(range(len(ids))):
            raise ConfigError("ues: ue_id values must be 0..n-1")
        self.n_ues = len(scenario.ues)
        self.n_cells = self.cfg.n_cells
        self.now = 0

        ss = np.random.SeedSequence(self.seed)
        children = ss.spawn(2 + self.n_ues)
        radio_rng = np.random.default_rng(children[0])
        self.rng = np.random.default_rng(children[1])

        self.cells = [CellState(j, tuple(self.cfg.cell_positions[j])) for j in range(self.n_cells)]
        self.ue_positions = np.zeros((self.n_ues, 2))
        self.ues: list[UeState] = []
        for i, ucfg in enumerate(sorted(scenario.ues, key=lambda u: u.ue_id)):
            ue = UeState(ucfg, self.cfg.drop_deadline_ms, np.random.default_rng(children[2 + i]))
            self.ues.append(ue)
            self.ue_positions[i] = ucfg.position

        self.radio = RadioEnvironment(np.asarray(self.cfg.cell_positions, float),
                                      self.n_ues, scenario.radio, radio_rng)
        self.radio.refresh(self.ue_positions, np.zeros(self.n_cells))
        for i, ucfg in enumerate(sorted(scenario.ues, key=lambda u: u.ue_id)):
            serving = ucfg.serving_cell
            if serving is None:
                serving = int(np.argmax(self.radio.rsrp[i]))
            self.ues[i].serving_cell = serving
            self.cells[serving].attached.add(i)

        self.ranges = NormRanges.for_sim(self.cfg)
        self.in_flight: list = []            # (deliver_at, ue, direction, queue_delay)
        self.events: list[SimEvent] = []
        self.pending_reports: list[KpmReport] = []
        self.handover_windows: list[tuple[int, int, int]] = []   # (ue, start, attach)
        self.handover_count = 0
        self.packet_delays: dict[int, list] = {u.ue_id: [] for u in self.ues}
        self.delay_trace: list = []
        self._interval_acc = None
        self._emit_kpm()                     # grid origin: both report classes at t=0

    # ------------------------------------------------------------------
    # public control surface

    def request_handover(self, ue_id: int, target: int,
                         reservation: ReservationRequest | None = None) -> bool:
        """Start the preparation phase toward target; resources may be
        reserved at the target as part of preparation. Rejected (warning
        event, no state change) unless the UE is idle."""
        ue = self.ues[ue_id]
        if target == ue.serving_cell or not (0 <= target < self.n_cells):
            return False
        if ue.ho_state != IDLE:
            self._event("handover_rejected", ue_id, target)
            return False
        ue.ho_state = PREPARING
        ue.ho_target = target
        ue.ho_exec_at = self.now + self.cfg.phase2_delay_ms
        self._event("handover_triggered", ue_id, target)
        if reservation is not None:
            self.apply_reservation(target, reservation)
        return True

    def apply_reservation(self, cell_id: int, req: ReservationRequest):
        if not 0.0 < req.kappa <= 1.0:
            raise ConfigError(f"reservation kappa must be in (0, 1], got {req.kappa}")
        cell = self.cells[cell_id]
        eta = self.scenario.mask.thresholds(self.n_cells)[cell_id]
        kappa = req.kappa if cell.load <= eta else self.scenario.reservation.overload_kappa
        prbs = int(math.ceil(kappa * max(req.serving_prb_usage, 0.0)))
        if prbs > 0:
            cell.reserved[req.ue_id] = Reservation(prbs, True, req.expiry_ms)
            self._event("reservation_applied", req.ue_id, cell_id, float(prbs))

    def radio_sample(self, ue_id: int):
        return self.radio.sample(ue_id, self.ues[ue_id].serving_cell, self.now)

    def cell_loads(self) -> np.ndarray:
        return np.array([c.load for c in self.cells])

    def compute_cell_load(self, cell_id: int) -> float:
        cell = self.cells[cell_id]
        return sum(cell.allocations.values()) / self.cfg.prb_capacity

    # ------------------------------------------------------------------
    # time advancement

    def advance(self, duration_ms: int) -> IntervalStats:
        """Run whole TTIs covering duration_ms and aggregate interval stats."""
        if duration_ms % self.cfg.tti_ms != 0:
            raise ConfigError("advance duration must be a multiple of tti_ms")
        acc = IntervalStats(start=self.now, end=self.now + duration_ms)
        hol_dl = {u.ue_id: 0.0 for u in self.ues}
        hol_ul = {u.ue_id: 0.0 for u in self.ues}
        hol_mx = {u.ue_id: 0.0 for u in self.ues}
        drops0 = {u.ue_id: u.dl_queue.drop_count + u.ul_queue.drop_count for u in self.ues}
        deliv0 = {u.ue_id: u.delivered_total for u in self.ues}
        ho_before = self.handover_count
        n = duration_ms // self.cfg.tti_ms
        for _ in range(n):
            self.step()
            for ue in self.ues:
                d, u = ue.hol(self.now)
                hol_dl[ue.ue_id] += d
                hol_ul[ue.ue_id] += u
                hol_mx[ue.ue_id] = max(hol_mx[ue.ue_id], d, u)
        acc.reports = self.pending_reports
        self.pending_reports = []
        for ue in self.ues:
            acc.hol_dl_mean[ue.ue_id] = hol_dl[ue.ue_id] / max(n, 1)
            acc.hol_ul_mean[ue.ue_id] = hol_ul[ue.ue_id] / max(n, 1)
            acc.hol_max[ue.ue_id] = hol_mx[ue.ue_id]
            acc.drops[ue.ue_id] = (ue.dl_queue.drop_count + ue.ul_queue.drop_count
                                   - drops0[ue.ue_id])
            acc.delivered[ue.ue_id] = ue.delivered_total - deliv0[ue.ue_id]
        acc.handovers = self.handover_count - ho_before
        return acc

    def step(self):
        """Advance one TTI: deliveries, handover phases, mobility, radio,
        arrivals, deadline drops, scheduling and service, KPM emission."""
        cfg = self.cfg
        t = self.now

        # deliveries due from the previous TTI's service
        if self.in_flight:
            due = [f for f in self.in_flight if f[0] <= t]
            if due:
                self.in_flight = [f for f in self.in_flight if f[0] > t]
                for _, ue_id, direction, qdelay in due:
                    ue = self.ues[ue_id]
                    ue.ctr_air_sum += cfg.tti_ms
                    ue.ctr_air_cnt += 1
                    ue.delivered_total += 1
                    if direction == 0:
                        ue.ctr_dl_delivered += 1
                    total = qdelay + cfg.tti_ms
                    if cfg.record_packets:
                        self.packet_delays[ue_id].append((t, total))
                    if cfg.record_events:
                        self._event("packet_delivered", ue_id, self.ues[ue_id].serving_cell, total)

        # handover phase transitions
        for ue in self.ues:
            if ue.ho_state == PREPARING and t >= ue.ho_exec_at:
                duration = cfg.handover_interruption_ms
                if self.radio.rsrp[ue.ue_id, ue.ho_target] < self.scenario.mask.rsrp_threshold_dbm:
                    duration += cfg.weak_rsrp_penalty_ms
                ue.ho_state = INTERRUPTED
                ue.ho_started_at = t
                ue.ho_attach_at = t + duration
                self._event("handover_started", ue.ue_id, ue.ho_target, duration)
            if ue.ho_state == INTERRUPTED and t >= ue.ho_attach_at:
                old = ue.serving_cell
                self.cells[old].attached.discard(ue.ue_id)
                self.cells[ue.ho_target].attached.add(ue.ue_id)
                ue.serving_cell = ue.ho_target
                ue.ho_state = IDLE
                ue.a3_timer.clear()
                self.handover_count += 1
                self.handover_windows.append((ue.ue_id, ue.ho_started_at, t))
                self._event("handover_completed", ue.ue_id, ue.serving_cell, float(old))

        # mobility with reflection at the area boundary
        moving = np.array([np.any(ue.velocity != 0.0) for ue in self.ues])
        if moving.any():
            xmin, ymin, xmax, ymax = cfg.area
            for ue in self.ues:
                if not np.any(ue.velocity != 0.0):
                    continue
                pos = self.ue_positions[ue.ue_id] + ue.velocity * (cfg.tti_ms / 1000.0)
                for k, (lo, hi) in enumerate(((xmin, xmax), (ymin, ymax))):
                    if pos[k] < lo:
                        pos[k] = 2 * lo - pos[k]
                        ue.velocity[k] = -ue.velocity[k]
                    elif pos[k] > hi:
                        pos[k] = 2 * hi - pos[k]
                        ue.velocity[k] = -ue.velocity[k]
                self.ue_positions[ue.ue_id] = pos

        # radio refresh (shadowing advances every TTI)
        self.radio.refresh(self.ue_positions, self.cell_loads())

        # traffic arrivals
        for ue in self.ues:
            for size in ue.dl_source.arrivals(t, cfg.tti_ms):
                ue.dl_queue.push(t, size)
                ue.ctr_dl_arrived += size
            for size in ue.ul_source.arrivals(t, cfg.tti_ms):
                ue.ul_queue.push(t, size)
                ue.ctr_ul_arrived += size

        # age-based deadline discard
        for ue in self.ues:
            nd = ue.dl_queue.drop_expired(t)
            nu = ue.ul_queue.drop_expired(t)
            ue.ctr_dl_drops += nd
            if (nd or nu) and cfg.record_events:
                self._event("packet_dropped", ue.ue_id, ue.serving_cell, float(nd + nu))

        # reservations expire
        for cell in self.cells:
            expired = [u for u, r in cell.reserved.items() if r.expiry_ms <= t]
            for u in expired:
                del cell.reserved[u]
                self._event("reservation_expired", u, cell.cell_id)

        # scheduling and service per cell
        for cell in self.cells:
            servable = [self.ues[u] for u in sorted(cell.attached) if self.ues[u].servable]
            backlog = {}
            bpp = {}
            for ue in servable:
                b = ue.dl_queue.backlog_bytes() + ue.ul_queue.backlog_bytes()
                if b > 1e-9:
                    backlog[ue.ue_id] = b
                    eff = prb_efficiency(self.radio.sinr[ue.ue_id, cell.cell_id], self.scenario.radio)
                    bpp[ue.ue_id] = cfg.prb_bytes * max(float(eff), 1e-6)
            blocked = sum(r.prbs for u, r in cell.reserved.items() if u not in cell.attached)
            capacity = max(cfg.prb_capacity - blocked, 0)
            prio = {u: r.prbs for u, r in cell.reserved.items()
                    if r.priority and u in cell.attached and u in backlog}
            alloc = schedule_prbs(capacity, backlog, bpp, prio)
            cell.allocations = alloc
            cell.load = sum(alloc.values()) / cfg.prb_capacity
            cell.ctr_prbs += sum(alloc.values())
            cell.ctr_ttis += 1
            for ue_id in sorted(alloc):
                ue = self.ues[ue_id]
                budget = alloc[ue_id] * bpp[ue_id]
                done_dl, used_dl = ue.dl_queue.serve(t, budget)
                done_ul, used_ul = ue.ul_queue.serve(t, budget - used_dl)
                for pkt, qdelay in done_dl:
                    self.in_flight.append((t + cfg.tti_ms, ue_id, 0, qdelay))
                for pkt, qdelay in done_ul:
                    self.in_flight.append((t + cfg.tti_ms, ue_id, 1, qdelay))
                ue.ctr_dl_bytes += used_dl
                ue.ctr_ul_bytes += used_ul
                cell.ctr_dl_bytes += used_dl
                cell.ctr_ul_bytes += used_ul
                share = used_dl / max(used_dl + used_ul, 1e-9)
                ue.ctr_dl_prbs += alloc[ue_id] * share
                ue.ctr_ul_prbs += alloc[ue_id] * (1 - share)
                ue.prb_usage_ema = 0.9 * ue.prb_usage_ema + 0.1 * alloc[ue_id]
            for ue in servable:
                if ue.ue_id not in alloc:
                    ue.prb_usage_ema *= 0.9

        # per-TTI head-of-line accounting
        for ue in self.ues:
            d, u = ue.hol(t)
            ue.ctr_hol_dl_sum += d
            ue.ctr_hol_ul_sum += u
            ue.ctr_ttis += 1
            if cfg.record_delay_trace:
                self.delay_trace.append((t, ue.ue_id, d, u))

        self.now = t + cfg.tti_ms
        self._emit_kpm()
        return self.now

    # ------------------------------------------------------------------
    # KPM emission

    def _emit_kpm(self):
        t = self.now
        cell_due = t % self.cfg.kpm_cell_period_ms == 0
        radio_due = t % self.cfg.kpm_radio_period_ms == 0
        if not (cell_due or radio_due):
            return
        report = KpmReport(timestamp=t)
        r = self.ranges
        if radio_due:
            for ue in self.ues:
                sample = self.radio_sample(ue.ue_id)
                report.radio[ue.ue_id] = sample
                for cell in sorted(sample.rsrp_dbm):
                    report.edge_features[(ue.ue_id, cell)] = edge_vector(
                        sample, cell, self.n_ues, self.n_cells, r)
        if cell_due:
            interval = max(self.cfg.kpm_cell_period_ms, 1)
            for ue in self.ues:
                n_tti = max(ue.ctr_ttis, 1)
                dl_thpt = ue.ctr_dl_bytes * 8.0 / (interval * 1000.0)
                ul_thpt = ue.ctr_ul_bytes * 8.0 / (interval * 1000.0)
                dl_deliv = max(ue.ctr_dl_delivered + ue.ctr_dl_drops, 1)
                vec = np.array([
                    r.scale(r.throughput_mbps, dl_thpt),
                    r.scale(r.throughput_mbps, ul_thpt),
                    r.scale(r.delay_ms, ue.ctr_hol_dl_sum / n_tti),
                    r.scale(r.delay_ms, ue.ctr_hol_ul_sum / n_tti),
                    r.scale(r.delay_ms, ue.ctr_air_sum / max(ue.ctr_air_cnt, 1)),
                    ue.ctr_dl_drops / dl_deliv,
                    r.scale(r.prbs, ue.ctr_dl_prbs / n_tti),
                    r.scale(r.prbs, ue.ctr_ul_prbs / n_tti),
                    r.scale(r.volume_kb, ue.ctr_dl_arrived / 1000.0),
                    r.scale(r.volume_kb, ue.ctr_ul_arrived / 1000.0),
                    r.scale(r.cqi, self.radio_cqi(ue.ue_id)),
                    r.scale(r.rsrp, self.radio.rsrp[ue.ue_id, ue.serving_cell]),
                    r.scale(r.sinr, self.radio.sinr[ue.ue_id, ue.serving_cell]),
                    ue.ue_id / max(self.n_ues - 1, 1),
                ])
                assert vec.shape == (UE_DIM,)
                report.ue_features[ue.ue_id] = vec
                ue.reset_counters()
            for cell in self.cells:
                n_tti = max(cell.ctr_ttis, 1)
                vec = np.array([
                    r.scale(r.throughput_mbps, cell.ctr_dl_bytes * 8.0 / (interval * 1000.0)),
                    r.scale(r.throughput_mbps, cell.ctr_ul_bytes * 8.0 / (interval * 1000.0)),
                    r.scale(r.prbs, cell.ctr_prbs / n_tti),
                    min(cell.ctr_prbs / n_tti / self.cfg.prb_capacity, 1.0),
                    cell.cell_id / max(self.n_cells - 1, 1),
                ])
                assert vec.shape == (CELL_DIM,)
                report.cell_features[cell.cell_id] = vec
                cell.ctr_prbs = cell.ctr_dl_bytes = cell.ctr_ul_bytes = 0.0
                cell.ctr_ttis = 0
        self.pending_reports.append(report)
        if self.cfg.record_events:
            self._event("kpm_emitted", -1, -1, float(len(report.edge_features)))

    def radio_cqi(self, ue_id: int) -> float:
        from .radio import cqi_from_sinr
        return float(cqi_from_sinr(self.radio.sinr[ue_id, self.ues[ue_id].serving_cell]))

    # ------------------------------------------------------------------
    # diagnostics

    def _event(self, kind, ue_id=-1, cell_id=-1, value=0.0):
        self.events.append(SimEvent(self.now, kind, ue_id, cell_id, value))

    def conservation_ok(self) -> bool:
        in_flight = {u.ue_id: 0 for u in self.ues}
        for _, ue_id, _, _ in self.in_flight:
            in_flight[ue_id] += 1
        for ue in self.ues:
            gen = ue.dl_queue.generated_count + ue.ul_queue.generated_count
            done = (ue.delivered_total
                    + ue.dl_queue.drop_count + ue.ul_queue.drop_count
                    + len(ue.dl_queue.packets) + len(ue.ul_queue.packets)
                    + in_flight[ue.ue_id])
            if gen != done:
                return False
        return True

    def loss_rate(self, ue_id: int) -> float:
        ue = self.ues[ue_id]
        gen = ue.dl_queue.generated_count + ue.ul_queue.generated_count
        drop = ue.dl_queue.drop_count + ue.ul_queue.drop_count
        return drop / gen if gen else 0.0
