"""Flow graphs and their line graphs.

A flow graph has one node per (ip, port) endpoint and one directed edge per
netflow; parallel edges are kept. Linearization turns every edge into a node
and connects two of them when the original edges share an endpoint,
regardless of direction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .data.records import Endpoint, Label, NetflowRecord, check_feature_width


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FlowGraph:
    nodes: tuple[Endpoint, ...]
    src: np.ndarray
    dst: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    flow_ids: np.ndarray
    compromised: frozenset[int]
    index: dict = field(repr=False, compare=False, default_factory=dict)
    mal_source_ips: frozenset[str] = frozenset()

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def edges(self):
        """Yield (src_index, dst_index, feature_vector, label, flow_id)."""
        for e in range(self.n_edges):
            yield (int(self.src[e]), int(self.dst[e]), self.features[e],
                   Label(int(self.labels[e])), int(self.flow_ids[e]))

    def compromised_endpoints(self) -> list[Endpoint]:
        return [self.nodes[i] for i in sorted(self.compromised)]

    def degrees(self) -> np.ndarray:
        deg = np.bincount(self.src, minlength=self.n_nodes)
        deg += np.bincount(self.dst[self.dst != self.src], minlength=self.n_nodes)
        return deg


@dataclass(frozen=True, eq=False)
class LineGraph:
    features: np.ndarray
    labels: np.ndarray
    flow_ids: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.labels)

    @property
    def n_adjacencies(self) -> int:
        """Undirected adjacency count (each pair once)."""
        return len(self.indices) // 2

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(i).tolist() for i in range(self.n_nodes)]


def _assemble(nodes: list[Endpoint], index: dict, records: Sequence[NetflowRecord],
              features=None, flow_id_start: int = 0):
    src = np.empty(len(records), dtype=np.int64)
    dst = np.empty(len(records), dtype=np.int64)
    for e, r in enumerate(records):
        for ep, arr in ((r.src, src), (r.dst, dst)):
            k = index.get(ep)
            if k is None:
                k = len(nodes)
                index[ep] = k
                nodes.append(ep)
            arr[e] = k
    if features is None:
        width = check_feature_width(records)
        features = (np.array([r.feature_vector() for r in records], dtype=np.float64)
                    if records else np.zeros((0, width)))
    labels = np.array([int(r.label) for r in records], dtype=np.int8)
    flow_ids = np.arange(flow_id_start, flow_id_start + len(records), dtype=np.int64)
    return src, dst, np.asarray(features, dtype=np.float64), labels, flow_ids


def _compromised(nodes, ips) -> frozenset[int]:
    return frozenset(i for i, ep in enumerate(nodes) if ep.ip in ips)


def build_flow_graph(records: Sequence[NetflowRecord], mal_source_ips: Iterable[str] = (),
                     features: np.ndarray | None = None) -> FlowGraph:
    """One directed edge per record, nodes numbered by first appearance.

    ``features`` optionally overrides the per-edge feature matrix (row i for
    record i), e.g. with preprocessed values. A node is compromised when its
    IP is in ``mal_source_ips``, whatever its port.
    """
    if not records:
        raise ValueError("cannot build a flow graph from zero records")
    if features is not None and len(features) != len(records):
        raise ValueError("features must have one row per record")
    nodes: list[Endpoint] = []
    index: dict = {}
    src, dst, feats, labels, flow_ids = _assemble(nodes, index, records, features)
    ips = frozenset(mal_source_ips)
    return FlowGraph(tuple(nodes), _frozen(src, np.int64), _frozen(dst, np.int64),
                     _frozen(feats, np.float64), _frozen(labels, np.int8),
                     _frozen(flow_ids, np.int64), _compromised(nodes, ips), index, ips)


def apply_edge_additions(g: FlowGraph, new_records: Sequence[NetflowRecord],
                         new_features: np.ndarray | None = None) -> FlowGraph:
    """Return a new graph with ``new_records`` appended as edges.

    Existing node and edge indices are unchanged; unseen endpoints become
    new nodes at the end. The compromised set is recomputed with the same IP
    rule, so new nodes of compromised hosts are included.
    """
    if not new_records:
        return g
    nodes = list(g.nodes)
    index = dict(g.index) if g.index else {ep: i for i, ep in enumerate(nodes)}
    src, dst, feats, labels, flow_ids = _assemble(
        nodes, index, new_records, new_features, int(g.flow_ids.max()) + 1 if g.n_edges else 0
    )
    if feats.shape[1] != g.feature_dim:
        raise ValueError(f"feature width {feats.shape[1]} != graph width {g.feature_dim}")
    return FlowGraph(
        tuple(nodes),
        _frozen(np.concatenate([g.src, src]), np.int64),
        _frozen(np.concatenate([g.dst, dst]), np.int64),
        _frozen(np.vstack([g.features, feats]), np.float64),
        _frozen(np.concatenate([g.labels, labels]), np.int8),
        _frozen(np.concatenate([g.flow_ids, flow_ids]), np.int64),
        _compromised(nodes, g.mal_source_ips),
        index,
        g.mal_source_ips,
    )


def linearize(g: FlowGraph) -> LineGraph:
    """Line graph of ``g``: one node per edge, in edge order."""
    if g.n_edges == 0:
        empty = np.zeros(0, dtype=np.int64)
        return LineGraph(np.zeros((0, g.feature_dim)), np.zeros(0, dtype=np.int8), empty,
                         np.zeros(1, dtype=np.int64), empty)
    indptr, indices = kernels.line_graph_csr(g.src, g.dst, g.n_nodes)
    return LineGraph(g.features, g.labels, g.flow_ids, _frozen(indptr, np.int64),
                     _frozen(indices, np.int64))


def dump_edge_list(g: FlowGraph, path: str | Path) -> None:
    """Write ``src_index dst_index label flow_id`` lines."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for s, d, lab, fid in zip(g.src, g.dst, g.labels, g.flow_ids):
            fh.write(f"{s} {d} {Label(int(lab))} {fid}\n")


def read_edge_list(path: str | Path) -> list[tuple[int, int, str, int]]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            s, d, lab, fid = line.split()
            out.append((int(s), int(d), lab, int(fid)))
    return out
