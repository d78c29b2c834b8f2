"""Continuous-time graph encoder: per-node GRU memories updated by KPM events,
read out through temporal attention over each node's recent neighbors.

State updates (ingest) are forward-only numpy. Embeddings are pure functions
of (parameters, replay inputs): the last memory update is recomputed through
the tape so gradients reach the GRU, attention, projection and node-kind
parameters, while older history stays frozen as constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nn import tensor as T
from ..nn.layers import GruCell, Mlp, MultiHeadAttention, TimeEncoder
from ..nn.optim import ParamStore
from ..sim.kpm import CELL_DIM, EDGE_DIM, UE_DIM
from .events import KIND_BS, KIND_UE, EdgeEvent, NodeEvent

FEAT_PAD = max(EDGE_DIM, UE_DIM, CELL_DIM)


@dataclass
class EncoderConfig:
    memory_dim: int = 16
    embed_dim: int = 32
    time_dim: int = 8
    n_heads: int = 2
    dropout: float = 0.1
    n_neighbors: int = 10

    @property
    def msg_dim(self) -> int:
        # edge: [h_self, h_other, time_enc, features]; node: [h_self, time_enc, features]
        edge = 2 * self.memory_dim + self.time_dim + FEAT_PAD
        node = self.memory_dim + self.time_dim + FEAT_PAD
        return max(edge, node) + 1          # trailing event-kind flag

    @property
    def key_dim(self) -> int:
        return self.memory_dim + EDGE_DIM + self.time_dim


@dataclass
class NodeReplay:
    """Frozen inputs that make one node's embedding reproducible off-line."""
    node: int
    kind: int
    h_prev: np.ndarray                   # memory before the last update
    msg: np.ndarray | None               # aggregated message of the last update
    rows: list = field(default_factory=list)   # (h_snapshot, edge_feat, dt_ms)


@dataclass
class StepReplay:
    now: int
    nodes: dict                           # node id -> NodeReplay
    link_pairs: list                      # (src, dst, label)


class TemporalGraphEncoder:
    def __init__(self, store: ParamStore, n_ues: int, n_cells: int,
                 cfg: EncoderConfig | None = None,
                 rng: np.random.Generator | None = None):
        self.cfg = cfg or EncoderConfig()
        self.n_ues = n_ues
        self.n_cells = n_cells
        self.n_nodes = n_ues + n_cells
        self.rng = rng or np.random.default_rng(0)
        c = self.cfg
        self.gru = GruCell(store, "enc.gru", c.msg_dim, c.memory_dim, "encoder")
        self.attn = MultiHeadAttention(store, "enc.attn", d_q=c.memory_dim,
                                       d_kv=c.key_dim, d_model=c.memory_dim,
                                       n_heads=c.n_heads, group="encoder",
                                       dropout=c.dropout)
        self.project = Mlp(store, "enc.project",
                           (2 * c.memory_dim, c.embed_dim, c.embed_dim), "encoder")
        self.kind_emb = store.create("enc.kind", (2, c.memory_dim), "encoder", init="normal")
        self.time_enc = TimeEncoder(c.time_dim)
        self.reset_state()

    # ------------------------------------------------------------------
    # state

    def reset_state(self):
        c = self.cfg
        self.memory = np.zeros((self.n_nodes, c.memory_dim))
        self.last_event_time = np.full(self.n_nodes, -1, dtype=np.int64)
        self.last_update: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        # per node: {neighbor: (t, edge_feat, h_neighbor_snapshot)}
        self.cache: dict[int, dict[int, tuple]] = {i: {} for i in range(self.n_nodes)}

    def node_kind(self, node: int) -> int:
        return KIND_UE if node < self.n_ues else KIND_BS

    # ------------------------------------------------------------------
    # message construction and memory update

    def _delta_t(self, node: int, t: int) -> float:
        last = self.last_event_time[node]
        return 0.0 if last < 0 else float(t - last)

    def _compose(self, segments: list[np.ndarray], flag: float) -> np.ndarray:
        vec = np.concatenate(segments)
        out = np.zeros(self.cfg.msg_dim)
        out[:vec.size] = vec
        out[-1] = flag
        return out

    def make_messages(self, event) -> list[tuple[int, int, np.ndarray]]:
        """(node, timestamp, message) records; two for an edge event, one for
        a node event. Elapsed time is encoded before concatenation."""
        if isinstance(event, EdgeEvent):
            i, j, t = event.src, event.dst, event.t
            if self._delta_t(i, t) < 0 or self._delta_t(j, t) < 0:
                raise ValueError("event stream out of order")
            phi_i = self.time_enc(self._delta_t(i, t))
            phi_j = self.time_enc(self._delta_t(j, t))
            m_i = self._compose([self.memory[i], self.memory[j], phi_i, event.features], 1.0)
            m_j = self._compose([self.memory[j], self.memory[i], phi_j, event.features], 1.0)
            return [(i, t, m_i), (j, t, m_j)]
        assert isinstance(event, NodeEvent)
        i, t = event.node, event.t
        phi = self.time_enc(self._delta_t(i, t))
        feat = np.zeros(FEAT_PAD)
        feat[:event.features.size] = event.features
        return [(i, t, self._compose([self.memory[i], phi, feat], 0.0))]

    @staticmethod
    def aggregate_most_recent(messages: list[tuple[int, int, np.ndarray]]):
        """Keep one message per node: latest timestamp, stream order breaking ties."""
        latest: dict[int, tuple[int, np.ndarray]] = {}
        for node, t, msg in messages:
            if node not in latest or t >= latest[node][0]:
                latest[node] = (t, msg)
        return latest

    def ingest(self, edges: list[EdgeEvent], nodes: list[NodeEvent]) -> list[tuple]:
        """Apply one batch of events: messages from pre-batch state, most-recent
        aggregation, one batched GRU update, neighbor cache refresh.

        Returns the distinct (ue_node, bs_node) pairs seen, for link sampling.
        """
        events = sorted(list(edges) + list(nodes), key=lambda e: e.t)
        messages = []
        for ev in events:
            messages.extend(self.make_messages(ev))
        agg = self.aggregate_most_recent(messages)
        if agg:
            node_ids = sorted(agg)
            msgs = np.stack([agg[n][1] for n in node_ids])
            h_prev = self.memory[node_ids]
            h_new = self.gru(msgs, h_prev, tape=None).data
            for row, n in enumerate(node_ids):
                self.last_update[n] = (h_prev[row].copy(), msgs[row].copy())
                self.memory[n] = h_new[row]
                self.last_event_time[n] = agg[n][0]
        pairs = []
        seen = set()
        for e in sorted(edges, key=lambda e: (e.t, e.src, e.dst)):
            h_i = self._prebatch_snapshot(e.src)
            h_j = self._prebatch_snapshot(e.dst)
            self._cache_put(e.src, e.dst, e.t, e.features, h_j)
            self._cache_put(e.dst, e.src, e.t, e.features, h_i)
            if (e.src, e.dst) not in seen:
                seen.add((e.src, e.dst))
                pairs.append((e.src, e.dst))
        return pairs

    def _prebatch_snapshot(self, node: int) -> np.ndarray:
        if node in self.last_update:
            return self.last_update[node][0]
        return self.memory[node].copy()

    def _cache_put(self, node: int, neighbor: int, t: int, feat: np.ndarray,
                   h_snapshot: np.ndarray):
        entry = (t, feat.copy(), h_snapshot)
        cache = self.cache[node]
        cache[neighbor] = entry
        if len(cache) > self.cfg.n_neighbors:
            oldest = min(cache, key=lambda k: (cache[k][0], k))
            del cache[oldest]

    # ------------------------------------------------------------------
    # embeddings

    def snapshot(self, now: int, link_pairs: list | None = None) -> StepReplay:
        """Freeze every node's embedding inputs at this instant."""
        nodes = {}
        for n in range(self.n_nodes):
            if n in self.last_update:
                h_prev, msg = self.last_update[n]
            else:
                h_prev, msg = self.memory[n].copy(), None
            rows = [(entry[2], entry[1], float(now - entry[0]))
                    for _, entry in sorted(self.cache[n].items(),
                                           key=lambda kv: (kv[1][0], kv[0]))]
            nodes[n] = NodeReplay(node=n, kind=self.node_kind(n),
                                  h_prev=h_prev, msg=msg, rows=rows)
        return StepReplay(now=now, nodes=nodes, link_pairs=list(link_pairs or []))

    def embed_nodes(self, replay: StepReplay, node_ids: list[int], tape=None,
                    training: bool = False):
        """Batched embeddings (len(node_ids), embed_dim) from frozen inputs."""
        c = self.cfg
        inputs = [replay.nodes[n] for n in node_ids]
        n = len(inputs)

        # memory through the last GRU update where one exists
        upd = [k for k, r in enumerate(inputs) if r.msg is not None]
        fresh = [k for k, r in enumerate(inputs) if r.msg is None]
        parts = []
        if upd:
            msgs = np.stack([inputs[k].msg for k in upd])
            h_prev = np.stack([inputs[k].h_prev for k in upd])
            parts.append(self.gru(T.const(msgs), T.const(h_prev), tape))
        if fresh:
            parts.append(T.const(np.stack([inputs[k].h_prev for k in fresh])))
        h = parts[0] if len(parts) == 1 else T.concat(parts, axis=0, tape=tape)
        order = np.argsort(np.array(upd + fresh))
        if not np.array_equal(order, np.arange(n)):
            h = T.gather_rows(h, order, tape)
        kinds = np.array([r.kind for r in inputs])
        h_eff = T.add(h, T.gather_rows(self.kind_emb, kinds, tape), tape)

        # temporal attention over cached neighbor interactions
        with_rows = [k for k, r in enumerate(inputs) if r.rows]
        without = [k for k, r in enumerate(inputs) if not r.rows]
        tilde_parts = []
        if with_rows:
            G = c.n_neighbors
            kv = np.zeros((len(with_rows), G, c.key_dim))
            valid = np.zeros((len(with_rows), G), dtype=bool)
            for b, k in enumerate(with_rows):
                for g, (h_snap, feat, dt) in enumerate(inputs[k].rows[:G]):
                    kv[b, g] = np.concatenate([h_snap, feat, self.time_enc(dt)])
                    valid[b, g] = True
            q = T.gather_rows(h_eff, np.array(with_rows), tape)
            tilde_parts.append(self.attn(q, T.const(kv), valid, tape,
                                         training=training, rng=self.rng))
        if without:
            tilde_parts.append(T.const(np.zeros((len(without), c.memory_dim))))
        tilde = tilde_parts[0] if len(tilde_parts) == 1 else T.concat(tilde_parts, axis=0, tape=tape)
        order2 = np.argsort(np.array(with_rows + without))
        if not np.array_equal(order2, np.arange(n)):
            tilde = T.gather_rows(tilde, order2, tape)

        return self.project(T.concat([h_eff, tilde], axis=1, tape=tape), tape)

    def embed_all(self, replay: StepReplay, tape=None, training: bool = False):
        z = self.embed_nodes(replay, list(range(self.n_nodes)), tape, training)
        g = T.mean_pool(z, tape)
        return z, g

    def embed_current(self, now: int, tape=None, training: bool = False):
        """Embeddings of the live state (no replay buffer involved)."""
        replay = self.snapshot(now)
        return self.embed_all(replay, tape, training), replay

    # ------------------------------------------------------------------
    # self-supervised objective

    def sample_link_pairs(self, batch_pairs: list[tuple[int, int]]):
        """Positive pairs from the batch; one uniformly drawn non-interacting
        cell per positive as its negative."""
        pairs = []
        by_ue: dict[int, set] = {}
        for (src, dst) in batch_pairs:
            by_ue.setdefault(src, set()).add(dst)
        all_cells = list(range(self.n_ues, self.n_nodes))
        for (src, dst) in batch_pairs:
            pairs.append((src, dst, 1.0))
            candidates = [c for c in all_cells if c not in by_ue[src]]
            if candidates:
                neg = candidates[int(self.rng.integers(len(candidates)))]
                pairs.append((src, neg, 0.0))
        return pairs

    def link_prediction_loss(self, replay: StepReplay, tape=None,
                             z_cache=None):
        """Mean binary cross entropy of sigmoid link scores z_i . z_j."""
        pairs = replay.link_pairs
        if not pairs:
            return T.const(0.0), 0
        involved = sorted({n for (i, j, _) in pairs for n in (i, j)})
        if z_cache is not None:
            z = z_cache["z"]
            index = z_cache["index"]
        else:
            z = self.embed_nodes(replay, involved, tape)
            index = {n: k for k, n in enumerate(involved)}
        rows_i = np.array([index[i] for (i, _, _) in pairs])
        rows_j = np.array([index[j] for (_, j, _) in pairs])
        y = np.array([label for (_, _, label) in pairs])
        zi = T.gather_rows(z, rows_i, tape)
        zj = T.gather_rows(z, rows_j, tape)
        scores = T.tsum(T.mul(zi, zj, tape), axis=1, tape=tape)
        # bce(sigmoid(s), y) = softplus(s) - y*s
        loss = T.sub(T.softplus(scores, tape), T.mul(T.const(y), scores, tape), tape)
        return T.tmean(loss, tape=tape), len(pairs)
