from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..data.records import Label
from . import autodiff as ad
from .sage import SageModel, forward, structure_for, forward_tape


GRAD_FLOOR = 1e-6


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainReport:
    losses: list[float]
    accuracy: float
    recall: float
    precision: float
    f1: float
    seconds: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        return {"losses": list(self.losses), "accuracy": self.accuracy, "recall": self.recall,
                "precision": self.precision, "f1": self.f1, "seconds": self.seconds}


def class_weights(labels: np.ndarray, scheme: str = "balanced") -> np.ndarray:
    counts = np.bincount(labels, minlength=2).astype(np.float64)
    if scheme == "none":
        return np.ones(2)
    # inverse class frequency, scaled so a balanced set gets weight 1
    return counts.sum() / (2.0 * counts)


def _check_labels(model: SageModel, graph, labels) -> np.ndarray:
    if labels is None:
        labels = graph.labels
    labels = np.asarray(labels, dtype=np.int64)
    n = graph.n_edges if model.mode == "edge_class" else graph.n_nodes
    if labels.shape != (n,):
        raise ValueError(f"expected {n} labels, got {labels.shape}")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 (benign) or 1 (malicious)")
    if len(np.unique(labels)) < 2:
        raise TrainingError("training labels contain a single class")
    return labels


def _loss_and_grads(model, st, labels, weights):
    params = [ad.param(a) for a in model.arrays()]
    logits = forward_tape(model, st, params)
    loss = ad.weighted_cross_entropy(logits, labels, weights)
    ad.backward(loss)
    return float(loss.value), [p.grad for p in params], logits.value


def train(model: SageModel, graph, labels=None, epochs: int | None = None,
          learning_rate: float | None = None) -> TrainReport:
    """Full-batch Adam on class-weighted cross-entropy. Updates ``model`` in
    place. ``losses[k]`` is the loss before the k-th update, and one more
    entry records the loss after the last update."""
    cfg = model.config
    epochs = cfg.epochs if epochs is None else epochs
    lr = cfg.learning_rate if learning_rate is None else learning_rate
    labels = _check_labels(model, graph, labels)
    weights = class_weights(labels, cfg.class_weight)
    st = structure_for(model, graph)
    b1, b2, eps = 0.9, 0.999, 1e-8
    arrays = [a.copy() for a in model.arrays()]
    m = [np.zeros_like(a) for a in arrays]
    v = [np.zeros_like(a) for a in arrays]
    losses = []
    t0 = time.perf_counter()
    for epoch in range(epochs + 1):
        model.set_arrays(arrays)
        loss, grads, logits = _loss_and_grads(model, st, labels, weights)
        if not np.isfinite(loss) or not all(np.isfinite(g).all() for g in grads):
            raise TrainingError(f"non-finite loss or gradient at epoch {epoch}")
        losses.append(loss)
        if epoch == epochs:
            break
        t = epoch + 1
        for i, g in enumerate(grads):
            m[i] = b1 * m[i] + (1 - b1) * g
            v[i] = b2 * v[i] + (1 - b2) * g * g
            mhat = m[i] / (1 - b1 ** t)
            vhat = v[i] / (1 - b2 ** t)
            arrays[i] = arrays[i] - lr * mhat / (np.sqrt(vhat) + eps)
    seconds = time.perf_counter() - t0
    pred = decide(logits)
    tp = int(((pred == 1) & (labels == 1)).sum())
    fp = int(((pred == 1) & (labels == 0)).sum())
    fn = int(((pred == 0) & (labels == 1)).sum())
    rec = tp / (tp + fn) if tp + fn else 0.0
    prec = tp / (tp + fp) if tp + fp else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return TrainReport(losses, float((pred == labels).mean()), rec, prec, f1, seconds)


def decide(logits: np.ndarray) -> np.ndarray:
    """1 where the malicious logit is strictly larger; ties are benign."""
    logits = np.asarray(logits)
    return (logits[:, 1] > logits[:, 0]).astype(np.int8)


def predict(model: SageModel, graph) -> list[Label]:
    return [Label(int(v)) for v in decide(forward(model, graph))]


def predict_array(model: SageModel, graph) -> np.ndarray:
    return decide(forward(model, graph))


def gradient_check(model: SageModel, graph, labels=None, epsilon: float = 1e-5) -> float:
    """Largest normwise relative error between backprop and central
    differences, taken per parameter array:
    |a - n| / max(|a| + |n|, 1e-6). The floor keeps arrays whose true
    gradient is zero from turning finite-difference noise into a ratio of 1."""
    if not epsilon > 0:
        raise ValueError("epsilon must be a positive step")
    labels = _check_labels(model, graph, labels)
    weights = class_weights(labels, model.config.class_weight)
    st = structure_for(model, graph)
    probe = model.copy()
    _, grads, _ = _loss_and_grads(probe, st, labels, weights)
    arrays = probe.arrays()

    def loss_at():
        logits = forward_tape(probe, st, [ad.const(a) for a in probe.arrays()])
        return float(ad.weighted_cross_entropy(logits, labels, weights).value)

    worst = 0.0
    for a, g in zip(arrays, grads):
        num = np.zeros_like(a)
        flat, nflat = a.reshape(-1), num.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + epsilon
            up = loss_at()
            flat[i] = old - epsilon
            down = loss_at()
            flat[i] = old
            nflat[i] = (up - down) / (2 * epsilon)
        scale = max(np.linalg.norm(g) + np.linalg.norm(num), GRAD_FLOOR)
        worst = max(worst, float(np.linalg.norm(g - num) / scale))
    return worst
