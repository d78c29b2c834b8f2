"""Temporal graph events built from KPM reports.

Node ids are global: UE i maps to node i, cell j to node n_ues + j.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..sim.kpm import CELL_DIM, EDGE_DIM, UE_DIM, KpmReport

KIND_UE = 0
KIND_BS = 1


class SchemaError(ValueError):
    pass


@dataclass
class EdgeEvent:
    src: int            # UE node id
    dst: int            # BS node id
    t: int
    features: np.ndarray

    def __post_init__(self):
        if np.asarray(self.features).shape != (EDGE_DIM,):
            raise SchemaError(f"edge features must have dim {EDGE_DIM}, "
                              f"got {np.asarray(self.features).shape}")


@dataclass
class NodeEvent:
    node: int
    kind: int           # KIND_UE | KIND_BS
    t: int
    features: np.ndarray

    def __post_init__(self):
        want = UE_DIM if self.kind == KIND_UE else CELL_DIM
        if np.asarray(self.features).shape != (want,):
            raise SchemaError(f"node features for kind {self.kind} must have dim "
                              f"{want}, got {np.asarray(self.features).shape}")


def build_events(reports: list[KpmReport], n_ues: int):
    """One EdgeEvent per measured UE-cell pair, one NodeEvent per UE/cell
    counter group, in timestamp order."""
    edges: list[EdgeEvent] = []
    nodes: list[NodeEvent] = []
    last_t = None
    for report in reports:
        if last_t is not None and report.timestamp < last_t:
            raise SchemaError("reports must be timestamp ordered")
        last_t = report.timestamp
        for (ue, cell) in sorted(report.edge_features):
            edges.append(EdgeEvent(src=ue, dst=n_ues + cell, t=report.timestamp,
                                   features=report.edge_features[(ue, cell)]))
        for ue in sorted(report.ue_features):
            nodes.append(NodeEvent(node=ue, kind=KIND_UE, t=report.timestamp,
                                   features=report.ue_features[ue]))
        for cell in sorted(report.cell_features):
            nodes.append(NodeEvent(node=n_ues + cell, kind=KIND_BS, t=report.timestamp,
                                   features=report.cell_features[cell]))
    return edges, nodes


def dump_events(path: str | Path, edges: list[EdgeEvent], nodes: list[NodeEvent]):
    """CSV dump so encoder behaviour can be replayed without the simulator."""
    rows = []
    for e in edges:
        rows.append(("edge", e.src, e.dst, e.t) + tuple(e.features))
    for n in nodes:
        rows.append(("node", n.node, n.kind, n.t) + tuple(n.features))
    rows.sort(key=lambda r: (r[3], r[0], r[1], r[2]))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "a", "b", "t", "features..."])
        for row in rows:
            w.writerow(row)


def load_events(path: str | Path):
    edges, nodes = [], []
    with open(path) as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            kind, a, b, t = row[0], int(row[1]), int(row[2]), int(row[3])
            feats = np.array([float(x) for x in row[4:]])
            if kind == "edge":
                edges.append(EdgeEvent(a, b, t, feats))
            else:
                nodes.append(NodeEvent(a, b, t, feats))
    return edges, nodes
