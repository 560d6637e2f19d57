"""E-GraphSAGE (edge classification on flow graphs) and GraphSAGE on line
graphs (node classification), both with mean aggregation.

Layer update, for node state ``h`` and neighbourhood summary ``m``::

    h' = relu(h @ w_self + m @ w_neigh + bias)

On a flow graph the summary of node v is the mean, over every edge incident
to v in either direction, of concat(h_other_end, x_edge). Because both parts
are linear in the mean, it is computed as concat(P_nn @ h, P_ne @ X) with
two row-normalised incidence operators, and P_ne @ X is fixed per graph.
On a line graph the summary is simply the mean of neighbour states.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..graph import FlowGraph, LineGraph
from . import autodiff as ad

EDGE_CLASS = "edge_class"
NODE_CLASS = "node_class"
MODES = (EDGE_CLASS, NODE_CLASS)


@dataclass(frozen=True)
class SageConfig:
    hidden_dim: int = 128
    n_layers: int = 2
    learning_rate: float = 0.01
    epochs: int = 200
    seed: int = 0
    class_weight: str = "balanced"   # or "none"
    neighbor_cap: int | None = None

    def __post_init__(self):
        if self.hidden_dim < 1 or self.n_layers < 1:
            raise ValueError("hidden_dim and n_layers must be positive")
        if self.epochs < 0 or self.learning_rate < 0:
            raise ValueError("epochs and learning_rate must be non-negative")
        if self.class_weight not in ("balanced", "none"):
            raise ValueError("class_weight must be 'balanced' or 'none'")
        if self.neighbor_cap is not None and self.neighbor_cap < 1:
            raise ValueError("neighbor_cap must be positive")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SageLayerParams:
    w_self: np.ndarray
    w_neigh: np.ndarray
    bias: np.ndarray

    @property
    def d_in(self) -> int:
        return self.w_self.shape[0]

    @property
    def d_out(self) -> int:
        return self.w_self.shape[1]


@dataclass
class SageModel:
    mode: str
    input_dim: int
    layers: list[SageLayerParams]
    head_w: np.ndarray
    head_b: np.ndarray
    config: SageConfig = field(default_factory=SageConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        d = self.input_dim
        for k, layer in enumerate(self.layers):
            d_agg = d + self.input_dim if self.mode == EDGE_CLASS else d
            if layer.w_self.shape[0] != d or layer.w_neigh.shape != (d_agg, layer.d_out) \
                    or layer.bias.shape != (layer.d_out,):
                raise ValueError(f"layer {k} shapes do not chain")
            d = layer.d_out
        head_in = 2 * d if self.mode == EDGE_CLASS else d
        if self.head_w.shape != (head_in, 2) or self.head_b.shape != (2,):
            raise ValueError(f"head must be {head_in} x 2")

    def arrays(self) -> list[np.ndarray]:
        """Parameter arrays in a fixed order (shared with the optimiser)."""
        out = []
        for layer in self.layers:
            out += [layer.w_self, layer.w_neigh, layer.bias]
        return out + [self.head_w, self.head_b]

    def set_arrays(self, arrays) -> None:
        arrays = list(arrays)
        for k, layer in enumerate(self.layers):
            layer.w_self, layer.w_neigh, layer.bias = arrays[3 * k:3 * k + 3]
        self.head_w, self.head_b = arrays[-2:]

    def copy(self) -> "SageModel":
        m = SageModel(self.mode, self.input_dim,
                      [SageLayerParams(l.w_self.copy(), l.w_neigh.copy(), l.bias.copy())
                       for l in self.layers],
                      self.head_w.copy(), self.head_b.copy(), self.config)
        return m


def _glorot(rng, fan_in, fan_out):
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_in, fan_out))


def init_model(mode: str, input_dim: int, config: SageConfig | None = None) -> SageModel:
    config = config or SageConfig()
    if input_dim < 1:
        raise ValueError("input_dim must be positive")
    rng = np.random.default_rng(config.seed)
    layers = []
    d = input_dim
    for _ in range(config.n_layers):
        d_agg = d + input_dim if mode == EDGE_CLASS else d
        h = config.hidden_dim
        layers.append(SageLayerParams(_glorot(rng, d, h), _glorot(rng, d_agg, h), np.zeros(h)))
        d = h
    head_in = 2 * d if mode == EDGE_CLASS else d
    return SageModel(mode, input_dim, layers, _glorot(rng, head_in, 2), np.zeros(2), config)


# graph structure ------------------------------------------------------------

def _cap(rows, cols, extra, cap, seed):
    """Keep at most ``cap`` entries per row, chosen by a seeded draw."""
    if cap is None or len(rows) == 0:
        return rows, cols, extra
    counts = np.bincount(rows)
    if counts.max() <= cap:
        return rows, cols, extra
    rng = np.random.default_rng(seed)
    keys = rng.random(len(rows))
    order = np.lexsort((keys, rows))
    start = np.concatenate([[0], np.cumsum(counts)])[rows[order]]
    rank = np.arange(len(rows)) - start
    keep = np.sort(order[rank < cap])
    return rows[keep], cols[keep], None if extra is None else extra[keep]


@dataclass
class EdgeStructure:
    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    p_node: ad.SparseOp      # node -> mean over opposite endpoints
    edge_mean: np.ndarray    # node -> mean of incident edge features


@dataclass
class NodeStructure:
    features: np.ndarray
    p_node: ad.SparseOp


def edge_structure(g: FlowGraph, neighbor_cap: int | None = None, seed: int = 0) -> EdgeStructure:
    src = np.asarray(g.src, dtype=np.int64)
    dst = np.asarray(g.dst, dtype=np.int64)
    e = np.arange(g.n_edges, dtype=np.int64)
    loop = src == dst
    # each edge is seen from both ends; a self-loop only once
    rows = np.concatenate([src, dst[~loop]])
    other = np.concatenate([dst, src[~loop]])
    edges = np.concatenate([e, e[~loop]])
    rows, other, edges = _cap(rows, other, edges, neighbor_cap, seed)
    p_node = ad.mean_operator(rows, other, g.n_nodes, g.n_nodes)
    p_edge = ad.mean_operator(rows, edges, g.n_nodes, g.n_edges)
    return EdgeStructure(g.n_nodes, src, dst, p_node, p_edge @ np.asarray(g.features))


def node_structure(lg: LineGraph, neighbor_cap: int | None = None, seed: int = 0) -> NodeStructure:
    n = lg.n_nodes
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(lg.indptr))
    cols = np.asarray(lg.indices, dtype=np.int64)
    rows, cols, _ = _cap(rows, cols, None, neighbor_cap, seed)
    return NodeStructure(np.asarray(lg.features, dtype=np.float64),
                         ad.mean_operator(rows, cols, n, n))


def structure_for(model: SageModel, graph):
    cap, seed = model.config.neighbor_cap, model.config.seed
    if model.mode == EDGE_CLASS:
        if not isinstance(graph, FlowGraph):
            raise TypeError("edge_class models take a FlowGraph")
        if graph.feature_dim != model.input_dim:
            raise ValueError(f"edge features have width {graph.feature_dim}, model expects {model.input_dim}")
        return edge_structure(graph, cap, seed)
    if not isinstance(graph, LineGraph):
        raise TypeError("node_class models take a LineGraph")
    if graph.n_nodes and graph.features.shape[1] != model.input_dim:
        raise ValueError(f"node features have width {graph.features.shape[1]}, model expects {model.input_dim}")
    return node_structure(graph, cap, seed)


# forward --------------------------------------------------------------------

def _layer(h, agg, p: list):
    w_self, w_neigh, bias = p
    z = ad.add(ad.matmul(h, w_self), ad.matmul(agg, w_neigh))
    return ad.relu(ad.add_bias(z, bias))


def forward_tape(model: SageModel, st, params: list[ad.Tensor]) -> ad.Tensor:
    """Logits as a tape node; ``params`` wraps ``model.arrays()``."""
    n_layers = len(model.layers)
    if isinstance(st, EdgeStructure):
        h = ad.const(np.ones((st.n_nodes, model.input_dim)))
        xbar = ad.const(st.edge_mean)
        for k in range(n_layers):
            agg = ad.concat(ad.spmm(st.p_node, h), xbar)
            h = _layer(h, agg, params[3 * k:3 * k + 3])
        z = ad.concat(ad.take_rows(h, st.src), ad.take_rows(h, st.dst))
    else:
        h = ad.const(st.features)
        for k in range(n_layers):
            h = _layer(h, ad.spmm(st.p_node, h), params[3 * k:3 * k + 3])
        z = h
    return ad.add_bias(ad.matmul(z, params[-2]), params[-1])


def logits_for(model: SageModel, st) -> np.ndarray:
    return forward_tape(model, st, [ad.const(a) for a in model.arrays()]).value


def egraphsage_forward(model: SageModel, g: FlowGraph) -> np.ndarray:
    if model.mode != EDGE_CLASS:
        raise ValueError("egraphsage_forward needs an edge_class model")
    return logits_for(model, structure_for(model, g))


def linegraphsage_forward(model: SageModel, lg: LineGraph) -> np.ndarray:
    if model.mode != NODE_CLASS:
        raise ValueError("linegraphsage_forward needs a node_class model")
    if lg.n_nodes == 0:
        return np.zeros((0, 2))
    return logits_for(model, structure_for(model, lg))


def forward(model: SageModel, graph) -> np.ndarray:
    if model.mode == EDGE_CLASS:
        return egraphsage_forward(model, graph)
    return linegraphsage_forward(model, graph)
