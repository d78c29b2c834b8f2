"""PRB allocation: priority reservations first, then backlog-proportional fair."""

from __future__ import annotations

import math


def largest_remainder(weights: dict[int, float], needs: dict[int, int], budget: int) -> dict[int, int]:
    """Integer split of budget proportional to weights, capped by per-key need.

    Deterministic: remainders tie-break toward the lower key. Unused capacity
    from capped keys is redistributed until stable.
    """
    alloc = {k: 0 for k in weights}
    active = {k for k, w in weights.items() if w > 0 and needs.get(k, 0) > 0}
    remaining = budget
    while remaining > 0 and active:
        total_w = sum(weights[k] for k in active)
        quotas = {k: remaining * weights[k] / total_w for k in active}
        grants = {}
        for k in active:
            grants[k] = min(int(math.floor(quotas[k])), needs[k] - alloc[k])
        leftover = remaining - sum(grants.values())
        # hand out remainder PRBs by descending fractional part, low key first on ties
        by_frac = sorted(active, key=lambda k: (-(quotas[k] - math.floor(quotas[k])), k))
        for k in by_frac:
            if leftover <= 0:
                break
            if alloc[k] + grants[k] < needs[k]:
                grants[k] += 1
                leftover -= 1
        progressed = False
        for k, g in grants.items():
            if g > 0:
                alloc[k] += g
                remaining -= g
                progressed = True
        active = {k for k in active if alloc[k] < needs[k]}
        if not progressed:
            break
    return alloc


def schedule_prbs(capacity: int, backlog_bytes: dict[int, float],
                  bytes_per_prb: dict[int, float],
                  reservations: dict[int, int]) -> dict[int, int]:
    """One TTI of PRB allocation for a cell.

    backlog_bytes / bytes_per_prb are keyed by servable UE id. reservations
    maps UE id -> reserved PRB count for attached, priority-flagged UEs; those
    are served first up to their reservation, everything left goes
    backlog-proportional. No PRB is allocated to an empty queue.
    """
    needs = {}
    for ue, bytes_left in backlog_bytes.items():
        bpp = max(bytes_per_prb.get(ue, 1.0), 1e-9)
        needs[ue] = int(math.ceil(bytes_left / bpp)) if bytes_left > 1e-9 else 0
    alloc = {ue: 0 for ue in backlog_bytes}
    left = capacity
    for ue in sorted(reservations):
        if ue not in needs or needs[ue] <= 0:
            continue
        grant = min(reservations[ue], needs[ue], left)
        alloc[ue] += grant
        left -= grant
        if left <= 0:
            break
    if left > 0:
        residual_needs = {ue: needs[ue] - alloc[ue] for ue in needs}
        weights = {ue: backlog_bytes[ue] for ue in needs if residual_needs[ue] > 0}
        extra = largest_remainder(weights, residual_needs, left)
        for ue, g in extra.items():
            alloc[ue] += g
    return {ue: g for ue, g in alloc.items() if g > 0}
