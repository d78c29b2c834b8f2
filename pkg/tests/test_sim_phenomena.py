"""Handover delay phenomenology: interruption spikes and reservation pairing."""

import numpy as np

from ranho.scenarios import crossing_2cell
from ranho.sim import ReservationRequest, WorldState, evaluate_a3


def run_crossing_with_a3(seed, ttis=3500, **kw):
    sc = crossing_2cell(seed=seed, record=True, **kw)
    w = WorldState(sc)
    ue = w.ues[0]
    for _ in range(ttis):
        w.step()
        if w.now % 120 == 0 and ue.ho_state == "idle":
            target = evaluate_a3(ue.a3_timer, w.radio_sample(0), sc.a3, 120)
            if target is not None:
                w.request_handover(0, target)
    return w


def packet_delay_split(world, pad_before=100, pad_after=1000):
    """(outside-window delays, per-window max delays) for UE 0."""
    pk = np.array(world.packet_delays[0], dtype=float)
    outside = np.ones(len(pk), bool)
    peaks = []
    for _, s, e in world.handover_windows:
        in_win = (pk[:, 0] >= s) & (pk[:, 0] <= e + pad_after)
        outside &= ~((pk[:, 0] >= s - pad_before) & (pk[:, 0] <= e + pad_after))
        if in_win.any():
            peaks.append(pk[in_win, 1].max())
    return pk[outside, 1], peaks


def test_interruption_spikes_and_recovery():
    w = run_crossing_with_a3(seed=1, agent_dl_mbps=1.0, agent_ul_mbps=0.4,
                             target_bg_mbps=1.2)
    assert w.handover_count >= 1
    outside, peaks = packet_delay_split(w)
    steady_median = np.median(outside)
    assert steady_median > 0
    # spike aligned with every handover window
    assert all(p >= 5 * steady_median for p in peaks)
    # recovery: delays outside win+1s are back near steady state
    assert np.percentile(outside, 95) <= 2 * steady_median


def test_hol_local_maximum_at_least_interruption_length():
    w = run_crossing_with_a3(seed=1, agent_dl_mbps=1.0, agent_ul_mbps=0.4,
                             target_bg_mbps=1.2)
    trace = np.array([(t, d, u) for (t, uid, d, u) in w.delay_trace if uid == 0])
    for _, s, e in w.handover_windows:
        win = trace[(trace[:, 0] >= s) & (trace[:, 0] <= e + 500)]
        assert (win[:, 1] + win[:, 2]).max() >= e - s


def run_paired_reservation(seed, reserve, bg_mbps=4.1, ho_at=8000):
    sc = crossing_2cell(seed=seed, record=True, agent_dl_mbps=2.0,
                        agent_ul_mbps=0.5, target_bg_mbps=bg_mbps)
    sc.reservation.expiry_ms = 2500
    sc.reservation.overload_kappa = 1.0
    w = WorldState(sc)
    ue = w.ues[0]
    requested = False
    for _ in range(1400):
        w.step()
        if not requested and w.now >= ho_at and ue.ho_state == "idle":
            req = None
            if reserve:
                req = ReservationRequest(0, max(ue.prb_usage_ema, 1.0), 1.0, w.now + 2500)
            w.request_handover(0, 1, req)
            requested = True
    assert w.handover_windows
    _, s, e = w.handover_windows[0]
    tr = np.array([(t, d + u) for (t, uid, d, u) in w.delay_trace if uid == 0])
    post = tr[(tr[:, 0] >= e) & (tr[:, 0] <= e + 800)]
    return float(post[:, 1].max())


def test_reservation_strictly_lowers_post_handover_peak():
    with_res = run_paired_reservation(seed=0, reserve=True)
    without = run_paired_reservation(seed=0, reserve=False)
    assert with_res < without
