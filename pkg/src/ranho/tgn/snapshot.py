"""Instantaneous-KPM encoder: the no-history, no-graph ablation.

Keeps only the latest raw feature vectors per node and projects them with a
small MLP. Exposes the same surface as the temporal encoder so the trainer
and evaluator can swap encoders without branching.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import tensor as T
from ..nn.layers import Mlp
from ..nn.optim import ParamStore
from ..sim.kpm import CELL_DIM, EDGE_DIM, UE_DIM
from .events import EdgeEvent, NodeEvent


@dataclass
class SnapshotReplay:
    now: int
    raw: np.ndarray                 # (n_nodes, raw_dim)
    link_pairs: list


class SnapshotEncoder:
    def __init__(self, store: ParamStore, n_ues: int, n_cells: int,
                 embed_dim: int = 32, rng: np.random.Generator | None = None):
        self.n_ues = n_ues
        self.n_cells = n_cells
        self.n_nodes = n_ues + n_cells
        self.rng = rng or np.random.default_rng(0)
        # UE row: [ue features, per-cell edge features]; cell row: [cell features]
        self.raw_dim = max(UE_DIM + n_cells * EDGE_DIM, CELL_DIM) + 1
        self.project = Mlp(store, "enc.project",
                           (self.raw_dim, embed_dim, embed_dim), "encoder")
        self.reset_state()

    def reset_state(self):
        self.ue_feat = np.zeros((self.n_ues, UE_DIM))
        self.edge_feat = np.zeros((self.n_ues, self.n_cells, EDGE_DIM))
        self.cell_feat = np.zeros((self.n_cells, CELL_DIM))

    def ingest(self, edges: list[EdgeEvent], nodes: list[NodeEvent]) -> list[tuple]:
        for e in sorted(edges, key=lambda e: e.t):
            self.edge_feat[e.src, e.dst - self.n_ues] = e.features
        for n in sorted(nodes, key=lambda n: n.t):
            if n.node < self.n_ues:
                self.ue_feat[n.node] = n.features
            else:
                self.cell_feat[n.node - self.n_ues] = n.features
        return []

    def sample_link_pairs(self, batch_pairs):
        return []

    def snapshot(self, now: int, link_pairs=None) -> SnapshotReplay:
        raw = np.zeros((self.n_nodes, self.raw_dim))
        for u in range(self.n_ues):
            vec = np.concatenate([self.ue_feat[u], self.edge_feat[u].reshape(-1)])
            raw[u, :vec.size] = vec
            raw[u, -1] = 0.0
        for c in range(self.n_cells):
            raw[self.n_ues + c, :CELL_DIM] = self.cell_feat[c]
            raw[self.n_ues + c, -1] = 1.0
        return SnapshotReplay(now=now, raw=raw, link_pairs=[])

    def embed_nodes(self, replay: SnapshotReplay, node_ids, tape=None,
                    training: bool = False):
        rows = replay.raw[np.asarray(node_ids, dtype=np.int64)]
        return self.project(T.const(rows), tape)

    def embed_all(self, replay: SnapshotReplay, tape=None, training: bool = False):
        z = self.embed_nodes(replay, list(range(self.n_nodes)), tape, training)
        g = T.mean_pool(z, tape)
        return z, g

    def embed_current(self, now: int, tape=None, training: bool = False):
        replay = self.snapshot(now)
        return self.embed_all(replay, tape, training), replay

    def link_prediction_loss(self, replay, tape=None, z_cache=None):
        return T.const(0.0), 0
