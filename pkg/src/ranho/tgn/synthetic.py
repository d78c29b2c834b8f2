"""Synthetic event streams for encoder tests and self-supervised training
checks, independent of the simulator."""

from __future__ import annotations

import numpy as np

from ..sim.kpm import CELL_DIM, EDGE_DIM, UE_DIM
from .events import KIND_BS, KIND_UE, EdgeEvent, NodeEvent


def synthetic_stream(n_ues: int = 3, n_cells: int = 4, n_steps: int = 60,
                     period_ms: int = 120, seed: int = 0, drift: float = 0.02,
                     noise: float = 0.02):
    """Stationary interaction pattern with smoothly drifting features.

    Each UE interacts with a fixed pair of cells every step, so link structure
    is learnable; features follow slow sinusoids plus small noise, so
    consecutive embeddings should stay close. Yields per-step
    (edge_events, node_events).
    """
    rng = np.random.default_rng(seed)
    prefer = {u: ((u % n_cells), ((u + 1) % n_cells)) for u in range(n_ues)}
    phase_e = rng.uniform(0, 2 * np.pi, size=(n_ues, EDGE_DIM))
    phase_u = rng.uniform(0, 2 * np.pi, size=(n_ues, UE_DIM))
    phase_c = rng.uniform(0, 2 * np.pi, size=(n_cells, CELL_DIM))
    steps = []
    for k in range(n_steps):
        t = (k + 1) * period_ms
        edges, nodes = [], []
        for u in range(n_ues):
            for cell in prefer[u]:
                feat = 0.5 + 0.4 * np.sin(drift * k + phase_e[u]) \
                    + noise * rng.normal(size=EDGE_DIM)
                edges.append(EdgeEvent(u, n_ues + cell, t, np.clip(feat, 0, 1)))
            featu = 0.5 + 0.4 * np.sin(drift * k + phase_u[u]) \
                + noise * rng.normal(size=UE_DIM)
            nodes.append(NodeEvent(u, KIND_UE, t, np.clip(featu, 0, 1)))
        for c in range(n_cells):
            featc = 0.5 + 0.4 * np.sin(drift * k + phase_c[c]) \
                + noise * rng.normal(size=CELL_DIM)
            nodes.append(NodeEvent(n_ues + c, KIND_BS, t, np.clip(featc, 0, 1)))
        steps.append((t, edges, nodes))
    return steps


def cosine_similarity_matrix(z: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    zn = z / np.maximum(norms, 1e-12)
    return zn @ zn.T


def adjacent_vs_lagged(sim: np.ndarray, lag: int = 10) -> tuple[float, float]:
    """Mean similarity of consecutive rows vs rows at least `lag` apart."""
    n = sim.shape[0]
    adjacent = np.mean([sim[i, i + 1] for i in range(n - 1)])
    far = [sim[i, j] for i in range(n) for j in range(i + lag, n)]
    return float(adjacent), float(np.mean(far))
