import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from ranho.sim import schedule_prbs
from ranho.sim.config import TrafficProfile
from ranho.sim.queues import QueueState, TrafficSource, make_sources


def test_single_saturated_ue_gets_full_capacity():
    alloc = schedule_prbs(50, {0: 1e9}, {0: 250.0}, {})
    assert alloc == {0: 50}


def test_equal_backlogs_within_one_prb():
    alloc = schedule_prbs(51, {0: 40000.0, 1: 40000.0}, {0: 250.0, 1: 250.0}, {})
    assert abs(alloc[0] - alloc[1]) <= 1
    assert alloc[0] + alloc[1] == 51


def test_reserved_ue_served_before_contender():
    # reservation of 20 with priority; both UEs saturated; capacity 50
    alloc = schedule_prbs(50, {0: 1e9, 1: 1e9}, {0: 250.0, 1: 250.0}, {0: 20})
    assert alloc[0] >= 20


def test_no_prbs_for_empty_queue():
    alloc = schedule_prbs(50, {0: 0.0, 1: 5000.0}, {0: 250.0, 1: 250.0}, {})
    assert 0 not in alloc


def test_unneeded_capacity_left_unallocated():
    alloc = schedule_prbs(50, {0: 500.0}, {0: 250.0}, {})
    assert alloc[0] == 2


@given(st.lists(st.integers(0, 100_000), min_size=1, max_size=6),
       st.integers(1, 80))
def test_allocations_never_exceed_capacity(backlogs, capacity):
    backlog = {i: float(b) for i, b in enumerate(backlogs)}
    bpp = {i: 250.0 for i in backlog}
    alloc = schedule_prbs(capacity, backlog, bpp, {})
    assert sum(alloc.values()) <= capacity
    for ue, prbs in alloc.items():
        assert backlog[ue] > 0
        assert prbs > 0


def test_queue_fifo_and_hol_delay():
    q = QueueState(drop_deadline_ms=400)
    q.push(0, 1000)
    q.push(10, 1000)
    assert q.head_of_line_delay(50) == 50
    done, used = q.serve(50, 1000.0)
    assert len(done) == 1 and done[0][1] == 50
    assert q.head_of_line_delay(50) == 40


def test_queue_partial_service_keeps_residual():
    q = QueueState(drop_deadline_ms=400)
    q.push(0, 1500)
    done, used = q.serve(10, 1000.0)
    assert not done and used == 1000.0
    assert q.backlog_bytes() == 500.0
    done, used = q.serve(20, 600.0)
    assert len(done) == 1 and used == 500.0


def test_queue_drop_expired():
    q = QueueState(drop_deadline_ms=100)
    q.push(0, 500)
    q.push(50, 500)
    assert q.drop_expired(100) == 0      # age 100 is not yet over the deadline
    assert q.drop_expired(101) == 1
    assert q.drop_count == 1
    assert len(q.packets) == 1


def test_persistent_source_rate():
    src = TrafficSource("persistent", 2.0, 1500, 0.0, 0, np.random.default_rng(0))
    total = sum(sum(src.arrivals(t * 10, 10)) for t in range(1000))
    # 2 Mbps for 10 s = 2.5 MB
    assert abs(total - 2.5e6) < 2 * 1500


def test_bursty_source_mean_rate_and_determinism():
    profile = TrafficProfile(kind="bursty", dl_rate_mbps=2.0, ul_rate_mbps=0.0,
                             burst_rate_hz=5.0, burst_bytes=30000)
    dl_a, _ = make_sources(profile, np.random.default_rng(3))
    dl_b, _ = make_sources(profile, np.random.default_rng(3))
    arr_a = [dl_a.arrivals(t * 10, 10) for t in range(2000)]
    arr_b = [dl_b.arrivals(t * 10, 10) for t in range(2000)]
    assert arr_a == arr_b
    total = sum(sum(a) for a in arr_a)
    # 5 bursts/s * 30 kB for 20 s = 3 MB within sampling noise
    assert 1.5e6 < total < 4.5e6
