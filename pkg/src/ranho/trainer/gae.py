"""Generalized advantage estimation over per-agent reward sequences."""

from __future__ import annotations

import numpy as np


def compute_gae(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray,
                bootstrap: np.ndarray, gamma: float, lam: float):
    """rewards/values/dones are (T, A); bootstrap is (A,) for the state after
    the last step. Returns (advantages, returns), both (T, A); returns are
    advantages + values before any normalization."""
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    T_n = rewards.shape[0]
    adv = np.zeros_like(rewards)
    carry = np.zeros(rewards.shape[1])
    for t in range(T_n - 1, -1, -1):
        next_v = bootstrap if t == T_n - 1 else values[t + 1]
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_v * nonterminal - values[t]
        carry = delta + gamma * lam * nonterminal * carry
        adv[t] = carry
    return adv, adv + values


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    flat = adv.reshape(-1)
    std = flat.std()
    return (adv - flat.mean()) / (std + 1e-8)
