"""Random-forest baseline: bootstrapped CART trees with Gini splits.

Trees are stored as flat arrays. A node with ``feature == -1`` is a leaf;
otherwise samples with ``x[feature] <= threshold`` go to ``left``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .data.records import Label, NetflowRecord
from .data.preprocess import raw_matrix
from .nn.serialize import load_container, save_container


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = None
    features_per_split: str = "sqrt"
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive")
        if self.features_per_split not in ("sqrt", "all"):
            raise ValueError("features_per_split must be 'sqrt' or 'all'")

    def n_candidates(self, n_features: int) -> int:
        if self.features_per_split == "all":
            return n_features
        return max(1, int(np.sqrt(n_features)))


@dataclass
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # majority class at the node (leaves are what matter)
    fraction: np.ndarray   # share of malicious samples reaching the node

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, i: int) -> bool:
        return self.feature[i] < 0

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``x``."""
        node = np.zeros(len(x), dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while len(active):
            cur = node[active]
            go_left = x[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.value[self.apply(x)]

    def depth(self) -> int:
        best, stack = 0, [(0, 0)]
        while stack:
            i, d = stack.pop()
            best = max(best, d)
            if self.feature[i] >= 0:
                stack += [(self.left[i], d + 1), (self.right[i], d + 1)]
        return best


def _majority(pos: int, n: int) -> int:
    # ties go to benign
    return 1 if 2 * pos > n else 0


def grow_tree(x: np.ndarray, y: np.ndarray, cfg: ForestConfig, rng: np.random.Generator) -> DecisionTree:
    n_features = x.shape[1]
    k = cfg.n_candidates(n_features)
    feat, thr, left, right, value, frac = [], [], [], [], [], []

    def new_node(idx):
        pos = int(y[idx].sum())
        feat.append(-1)
        thr.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(_majority(pos, len(idx)))
        frac.append(pos / len(idx))
        return len(feat) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        pos = y[idx].sum()
        if pos == 0 or pos == len(idx) or len(idx) < 2:
            continue
        if cfg.max_depth is not None and depth >= cfg.max_depth:
            continue
        order = rng.permutation(n_features)
        best = None
        # draw k candidates; if none of them can split, fall through to the rest
        for start in range(0, n_features, k):
            for f in order[start:start + k]:
                col = x[idx, f]
                srt = np.argsort(col, kind="stable")
                t, score, found = kernels.gini_best_split(col[srt], y[idx][srt])
                if found and (best is None or score < best[0]):
                    best = (score, int(f), t)
            if best is not None:
                break
        if best is None:
            continue
        _, f, t = best
        mask = x[idx, f] <= t
        li, ri = idx[mask], idx[~mask]
        ln, rn = new_node(li), new_node(ri)
        feat[node], thr[node], left[node], right[node] = f, t, ln, rn
        stack.append((rn, ri, depth + 1))
        stack.append((ln, li, depth + 1))
    return DecisionTree(np.array(feat, dtype=np.int64), np.array(thr, dtype=np.float64),
                        np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                        np.array(value, dtype=np.int8), np.array(frac, dtype=np.float64))


@dataclass
class Forest:
    trees: list[DecisionTree]
    n_features: int
    config: ForestConfig

    def votes(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise ValueError(f"forest expects {self.n_features} features, got shape {x.shape}")
        return np.sum([t.predict(x) for t in self.trees], axis=0)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return (2 * self.votes(x) > len(self.trees)).astype(np.int8)


def _xy(data, labels):
    if len(data) and isinstance(data[0], NetflowRecord):
        x = raw_matrix(data)
        y = np.array([int(r.label) for r in data]) if labels is None else labels
    else:
        x = data
        y = labels
    x = np.asarray(x, dtype=np.float64)
    if y is None:
        return x, None
    return x, np.asarray(y, dtype=np.int8)


def bootstrap_indices(n: int, seed: int, tree: int) -> np.ndarray:
    """Bootstrap rows used for tree ``tree`` (first draw of its generator)."""
    return np.random.default_rng([seed, tree]).integers(0, n, size=n)


def rf_fit(data: Sequence[NetflowRecord] | np.ndarray, labels=None,
           cfg: ForestConfig | None = None) -> Forest:
    """Fit on raw feature vectors (records or an (n, d) matrix plus labels)."""
    cfg = cfg or ForestConfig()
    x, y = _xy(data, labels)
    if y is None or len(y) != len(x):
        raise ValueError("need one label per row")
    if len(np.unique(y)) < 2:
        raise ValueError("rf_fit needs both classes in the training labels")
    trees = []
    for t in range(cfg.n_trees):
        rng = np.random.default_rng([cfg.seed, t])
        boot = rng.integers(0, len(y), size=len(y))
        trees.append(grow_tree(x[boot], y[boot], cfg, rng))
    return Forest(trees, x.shape[1], cfg)


def rf_predict(forest: Forest, data) -> list[Label]:
    return [Label(int(v)) for v in rf_predict_array(forest, data)]


def rf_predict_array(forest: Forest, data) -> np.ndarray:
    x, _ = _xy(data, None) if len(data) else (np.zeros((0, forest.n_features)), None)
    return forest.predict(x)


def save_forest(forest: Forest, path) -> None:
    arrays = {}
    for i, t in enumerate(forest.trees):
        for name in ("feature", "threshold", "left", "right", "value", "fraction"):
            arrays[f"t{i}_{name}"] = getattr(t, name)
    meta = {"n_features": forest.n_features, "n_trees": len(forest.trees),
            "config": dict(forest.config.__dict__)}
    save_container(path, "forest", meta, arrays)


def load_forest(path) -> Forest:
    meta, a = load_container(path, "forest")
    trees = [DecisionTree(*(a[f"t{i}_{name}"] for name in
                            ("feature", "threshold", "left", "right", "value", "fraction")))
             for i in range(meta["n_trees"])]
    return Forest(trees, meta["n_features"], ForestConfig(**meta["config"]))
