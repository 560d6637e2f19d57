"""Detection metrics and attack sweeps.

Detection rate (DR) under attack is the recall over the ORIGINAL malicious
test records only: records added by a structural attack are scored by the
model (they are part of the graph) but never counted.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import attacks as atk
from .data.preprocess import NormalizationParams, raw_matrix
from .data.records import Label, NetflowRecord
from .data.split import DatasetSplit
from .forest import Forest
from .graph import build_flow_graph, linearize
from .nn.sage import EDGE_CLASS, SageModel
from .nn.train import predict_array


@dataclass(frozen=True)
class Metrics:
    f1: float
    recall: float
    precision: float
    tp: int
    fp: int
    fn: int
    tn: int
    no_positives: bool = False

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "Metrics":
        return cls(**d)


def compute_metrics(predictions, labels) -> Metrics:
    """Confusion-matrix metrics with malicious as the positive class. With no
    positive labels recall is reported as 0 and ``no_positives`` is set."""
    p = np.asarray([int(v) for v in predictions], dtype=np.int64)
    y = np.asarray([int(v) for v in labels], dtype=np.int64)
    if p.shape != y.shape:
        raise ValueError(f"{len(p)} predictions for {len(y)} labels")
    if not np.isin(y, (0, 1)).all() or not np.isin(p, (0, 1)).all():
        raise ValueError("labels and predictions must be binary")
    tp = int(((p == 1) & (y == 1)).sum())
    fp = int(((p == 1) & (y == 0)).sum())
    fn = int(((p == 0) & (y == 1)).sum())
    tn = int(((p == 0) & (y == 0)).sum())
    recall = tp / (tp + fn) if tp + fn else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(f1, recall, precision, tp, fp, fn, tn, tp + fn == 0)


def detection_rate(predictions, labels) -> float:
    return compute_metrics(predictions, labels).recall


@dataclass
class DRCurve:
    attack_name: str
    model_name: str
    grid: list[tuple[float, float]]
    baseline_dr: float

    def __post_init__(self):
        params = [g[0] for g in self.grid]
        if params != sorted(params):
            raise ValueError("grid must be sorted by parameter")

    @property
    def key(self) -> str:
        return f"{self.attack_name}__{self.model_name}"

    def to_dict(self) -> dict:
        return {"attack_name": self.attack_name, "model_name": self.model_name,
                "grid": [[p, dr] for p, dr in self.grid], "baseline_dr": self.baseline_dr}

    @classmethod
    def from_dict(cls, d: dict) -> "DRCurve":
        return cls(d["attack_name"], d["model_name"], [tuple(g) for g in d["grid"]],
                   d["baseline_dr"])


@dataclass
class ExperimentReport:
    dataset: str
    split_seed: int
    configs: dict
    baseline: dict[str, Metrics]
    curves: list[DRCurve]
    feature_variants: dict[str, list] = field(default_factory=dict)
    excluded: dict[str, str] = field(default_factory=dict)
    training: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "format": "gnnids-report", "version": 1,
            "dataset": self.dataset, "split_seed": self.split_seed, "configs": self.configs,
            "baseline": {k: m.to_dict() for k, m in self.baseline.items()},
            "curves": [c.to_dict() for c in self.curves],
            "feature_variants": self.feature_variants, "excluded": self.excluded,
            "training": self.training,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(d["dataset"], d["split_seed"], d["configs"],
                   {k: Metrics.from_dict(m) for k, m in d["baseline"].items()},
                   [DRCurve.from_dict(c) for c in d["curves"]],
                   d.get("feature_variants", {}), d.get("excluded", {}), d.get("training", {}))

    def curve(self, attack_name: str, model_name: str) -> DRCurve:
        for c in self.curves:
            if c.attack_name == attack_name and c.model_name == model_name:
                return c
        raise KeyError(f"no curve {attack_name!r} for {model_name!r}")


# detectors ------------------------------------------------------------------

@dataclass
class GnnDetector:
    """A trained GNN plus what it needs to turn raw records into its input."""
    name: str
    model: SageModel
    params: NormalizationParams
    mal_source_ips: frozenset
    structural: bool = True

    def predict(self, records: Sequence[NetflowRecord]) -> np.ndarray:
        feats = self.params.transform_matrix(raw_matrix(records))
        g = build_flow_graph(records, self.mal_source_ips, features=feats)
        if self.model.mode == EDGE_CLASS:
            return predict_array(self.model, g)
        return predict_array(self.model, linearize(g))


@dataclass
class ForestDetector:
    name: str
    forest: Forest
    structural: bool = False

    def predict(self, records: Sequence[NetflowRecord]) -> np.ndarray:
        return self.forest.predict(raw_matrix(records))


# attack grid ----------------------------------------------------------------

@dataclass(frozen=True)
class AttackGrid:
    feature_steps: tuple = atk.FEATURE_STEPS
    beta: tuple = atk.C2X_GRID
    theta: tuple = atk.C2X_GRID
    eta: tuple = atk.ETA_GRID
    gamma: tuple = atk.GAMMA_GRID
    seed: int = 0
    override: bool = False

    def __post_init__(self):
        paper = {"beta": atk.C2X_GRID, "theta": atk.C2X_GRID, "eta": atk.ETA_GRID,
                 "gamma": atk.GAMMA_GRID}
        for name, allowed in paper.items():
            values = tuple(int(v) for v in getattr(self, name))
            object.__setattr__(self, name, tuple(sorted(set(values))))
            for v in values:
                atk._check_grid(name, v, allowed, self.override)
        steps = tuple(sorted(set(float(s) for s in self.feature_steps)))
        if any(s <= 0 for s in steps):
            raise atk.AttackError("feature steps must be positive")
        if not self.override and not set(steps) <= set(float(s) for s in atk.FEATURE_STEPS):
            raise atk.AttackError(f"feature steps {steps} outside schedule {atk.FEATURE_STEPS}")
        object.__setattr__(self, "feature_steps", steps)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class AttackPoint:
    attack: str          # feature | c2x_benign | c2x_malicious | add_node
    param: float
    gamma: int | None = None
    group: tuple[str, ...] | None = None

    @property
    def key(self) -> str:
        if self.attack == "feature":
            return f"feature__{'+'.join(self.group)}__{self.param:g}"
        if self.attack == "add_node":
            return f"add_node__gamma{self.gamma}__eta{self.param:g}"
        return f"{self.attack}__{self.param:g}"

    def to_dict(self) -> dict:
        return {"attack": self.attack, "param": self.param, "gamma": self.gamma,
                "group": list(self.group) if self.group else None}

    @classmethod
    def from_dict(cls, d: dict) -> "AttackPoint":
        return cls(d["attack"], d["param"], d["gamma"], tuple(d["group"]) if d["group"] else None)


def attack_plan(grid: AttackGrid, test: Sequence[NetflowRecord], mal_source_ips,
                existing=()) -> Iterator[tuple[AttackPoint, atk.AttackResult]]:
    """Yield every grid point with its attacked record set, in a fixed order:
    feature variants, C2x_B, C2x_M, then add-node by gamma and eta."""
    base = build_flow_graph(test, mal_source_ips)
    comp = base.compromised_endpoints()
    existing = set(existing) | set(base.nodes)
    for group in atk.FEATURE_GROUPS:
        for step in grid.feature_steps:
            yield (AttackPoint("feature", step, group=group),
                   atk.feature_attack(test, atk.FeatureAttackSpec(group, step)))
    for attack, fn, values in (("c2x_benign", atk.c2x_benign, grid.beta),
                               ("c2x_malicious", atk.c2x_malicious, grid.theta)):
        for v in values:
            yield AttackPoint(attack, v), fn(test, comp, v, grid.seed, override=grid.override)
    for gamma in grid.gamma:
        for eta in grid.eta:
            spec = atk.AddNodeSpec(eta, gamma, grid.seed, override=grid.override)
            yield AttackPoint("add_node", eta, gamma=gamma), atk.add_node_attack(test, comp, existing, spec)


def _curve_name(point: AttackPoint) -> str:
    if point.attack == "add_node":
        return f"add_node_gamma{point.gamma}"
    return point.attack


def score_points(detectors, test: Sequence[NetflowRecord], points) -> tuple[dict, list, dict]:
    """Baseline metrics, DR curves and raw feature-variant DRs.

    ``points`` yields (AttackPoint, AttackResult). Structural attacks are
    scored only for graph models; feature attacks for every model.
    """
    labels = np.array([int(r.label) for r in test], dtype=np.int64)
    n = len(test)
    baseline = {d.name: compute_metrics(d.predict(test), labels) for d in detectors}
    series: dict[tuple[str, str], list] = {}
    variants: dict[str, list] = {d.name: [] for d in detectors}
    for point, result in points:
        if result.n_original != n:
            raise ValueError(f"{point.key}: attacked set does not extend the test set")
        for d in detectors:
            if point.attack != "feature" and not d.structural:
                continue
            try:
                pred = d.predict(result.perturbed_records)[:n]
            except Exception as exc:
                raise RuntimeError(f"{point.key} on {d.name}: {exc}") from exc
            dr = detection_rate(pred, labels)
            if point.attack == "feature":
                variants[d.name].append(["+".join(point.group), point.param, dr])
            series.setdefault((_curve_name(point), d.name), []).append((point.param, dr))
    curves = []
    for (attack, model), pts in series.items():
        base = baseline[model].recall
        if attack == "feature":
            steps = sorted({p for p, _ in pts})
            pts = [(s, float(np.mean([dr for p, dr in pts if p == s]))) for s in steps]
        grid = [(0, base)] + sorted(pts)
        curves.append(DRCurve(attack, model, grid, base))
    return baseline, curves, variants


def run_attack_sweep(detectors, split: DatasetSplit, grid: AttackGrid) -> list[DRCurve]:
    """Curves for every attack in ``grid`` against every detector."""
    ips = split.malicious_source_ips()
    existing = {e for r in split.train for e in (r.src, r.dst)}
    _, curves, _ = score_points(detectors, split.test, attack_plan(grid, split.test, ips, existing))
    return curves


def mean_feature_drop(report: ExperimentReport, model: str) -> float:
    base = report.baseline[model].recall
    return float(np.mean([base - v[2] for v in report.feature_variants[model]]))
