"""Event-A3 trigger evaluation with time-to-trigger hysteresis timers."""

from __future__ import annotations

from .config import A3Config
from .radio import RadioSample


def evaluate_a3(a3_timer: dict[int, float], radio: RadioSample, cfg: A3Config,
                elapsed_ms: float):
    """Advance per-neighbor timers and return a target once one qualifies.

    A neighbor's timer advances by elapsed_ms while its RSRP exceeds the
    serving cell's by the hysteresis offset, and resets the moment the
    condition breaks. The trigger fires when a timer reaches the
    time-to-trigger; ties prefer the strongest RSRP, then the lowest cell id.
    """
    serving = radio.rsrp_dbm[radio.serving_cell]
    candidates = []
    for cell in radio.neighbor_cells:
        if radio.rsrp_dbm[cell] > serving + cfg.hysteresis_db:
            a3_timer[cell] = a3_timer.get(cell, 0.0) + elapsed_ms
            if a3_timer[cell] >= cfg.time_to_trigger_ms:
                candidates.append(cell)
        else:
            a3_timer[cell] = 0.0
    for cell in list(a3_timer):
        if cell not in radio.rsrp_dbm:
            a3_timer[cell] = 0.0
    if not candidates:
        return None
    return min(candidates, key=lambda c: (-radio.rsrp_dbm[c], c))
