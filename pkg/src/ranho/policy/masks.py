"""Feasibility masks over handover targets and masked-distribution algebra."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import tensor as T
from ..sim.config import MaskConfig
from ..sim.radio import RadioSample


@dataclass
class ActionMask:
    target: np.ndarray          # (C,) product mask, 0/1
    reported: np.ndarray        # connectivity component
    signal: np.ndarray          # signal-strength component
    load: np.ndarray            # load component
    ho_allowed: bool            # any valid target and the UE is idle

    @property
    def any_valid(self) -> bool:
        return bool(self.target.any())


def compute_masks(serving_cell: int, idle: bool, radio: RadioSample,
                  cell_loads: np.ndarray, cfg: MaskConfig) -> ActionMask:
    """Per-cell feasibility bits: reported in measurements, raw RSRP at or
    above the threshold, load at or below the per-cell threshold. The serving
    cell is never a valid target."""
    n_cells = len(cell_loads)
    etas = cfg.thresholds(n_cells)
    m1 = np.zeros(n_cells)
    m2 = np.zeros(n_cells)
    m3 = np.zeros(n_cells)
    for c in range(n_cells):
        if c in radio.rsrp_dbm and c != serving_cell:
            m1[c] = 1.0
            m2[c] = 1.0 if radio.rsrp_dbm[c] >= cfg.rsrp_threshold_dbm else 0.0
        m3[c] = 1.0 if cell_loads[c] <= etas[c] else 0.0
    target = m1 * m2 * m3
    target[serving_cell] = 0.0
    return ActionMask(target=target, reported=m1, signal=m2, load=m3,
                      ho_allowed=bool(target.any()) and idle)


def apply_mask_renormalize(probs, mask, tape=None):
    """pi_masked(a) = pi(a) m(a) / sum pi m. Rows must have a valid entry."""
    mask_arr = mask.data if isinstance(mask, T.Tensor) else np.asarray(mask, dtype=np.float64)
    if np.ndim(mask_arr) == 1:
        mask_arr = mask_arr[None, :]
    row_sums = (probs.data * mask_arr).sum(axis=-1)
    if np.any(row_sums <= 0.0):
        raise T.ContractError("mask removed all probability mass; "
                              "caller must force the stay action instead")
    masked = T.mul(probs, T.const(mask_arr), tape)
    denom = T.tsum(masked, axis=-1, keepdims=True, tape=tape)
    return T.div(masked, denom, tape)
