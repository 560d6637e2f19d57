from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .records import NetflowRecord, RecordError, check_feature_width


@dataclass(frozen=True)
class NormalizationParams:
    """Min-max statistics and one-hot vocabularies fitted on training records.

    ``categorical`` indexes into the full raw feature vector
    (duration, in_bytes, out_bytes, tot_packets, *extra_features).
    """

    mins: tuple[float, ...]
    maxs: tuple[float, ...]
    categorical: tuple[int, ...]
    vocab: tuple[tuple[float, ...], ...]

    @property
    def width_in(self) -> int:
        return len(self.mins)

    @property
    def width_out(self) -> int:
        n_num = self.width_in - len(self.categorical)
        return n_num + sum(len(v) for v in self.vocab)

    def to_dict(self) -> dict:
        return {"mins": list(self.mins), "maxs": list(self.maxs),
                "categorical": list(self.categorical), "vocab": [list(v) for v in self.vocab]}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationParams":
        return cls(tuple(d["mins"]), tuple(d["maxs"]), tuple(d["categorical"]),
                   tuple(tuple(v) for v in d["vocab"]))

    def transform_matrix(self, raw: np.ndarray) -> np.ndarray:
        """Scale a raw (n, width_in) matrix; values outside the fitted range
        are clipped to [0, 1] and constant columns map to 0."""
        raw = np.asarray(raw, dtype=np.float64)
        if raw.ndim != 2 or raw.shape[1] != self.width_in:
            raise ValueError(f"expected {self.width_in} raw features, got shape {raw.shape}")
        if not np.isfinite(raw).all():
            bad = int(np.argwhere(~np.isfinite(raw))[0][0])
            raise RecordError(f"row {bad}: non-finite feature value")
        mins = np.asarray(self.mins)
        span = np.asarray(self.maxs) - mins
        safe = np.where(span > 0, span, 1.0)
        scaled = np.where(span > 0, np.clip((raw - mins) / safe, 0.0, 1.0), 0.0)
        cat = set(self.categorical)
        blocks = []
        for j in range(self.width_in):
            if j in cat:
                values = np.asarray(self.vocab[self.categorical.index(j)])
                blocks.append((raw[:, j:j + 1] == values[None, :]).astype(np.float64))
            else:
                blocks.append(scaled[:, j:j + 1])
        if not blocks:
            return np.zeros((len(raw), 0))
        return np.hstack(blocks)

    def transform(self, records: Sequence[NetflowRecord]) -> list[NetflowRecord]:
        out = self.transform_matrix(raw_matrix(records))
        return [_with_features(r, row) for r, row in zip(records, out)]


def raw_matrix(records: Sequence[NetflowRecord]) -> np.ndarray:
    width = check_feature_width(records)
    if not records:
        return np.zeros((0, width))
    return np.array([r.feature_vector() for r in records], dtype=np.float64)


def _with_features(rec: NetflowRecord, row: np.ndarray) -> NetflowRecord:
    vals = [float(v) for v in row]
    return dataclasses.replace(
        rec, duration=vals[0], in_bytes=vals[1], out_bytes=vals[2], tot_packets=vals[3],
        extra_features=tuple(vals[4:]),
    )


def fit_normalization(train: Sequence[NetflowRecord], categorical: Sequence[int] = ()) -> NormalizationParams:
    """Fit on training records only. ``categorical`` indexes extra_features."""
    if not train:
        raise ValueError("cannot fit normalization on an empty training set")
    raw = raw_matrix(train)
    if not np.isfinite(raw).all():
        bad = int(np.argwhere(~np.isfinite(raw))[0][0])
        raise RecordError(f"row {bad}: non-finite feature value")
    cat = tuple(sorted(4 + int(i) for i in categorical))
    for j in cat:
        if j >= raw.shape[1]:
            raise ValueError(f"categorical index {j - 4} out of range")
    vocab = tuple(tuple(float(v) for v in np.unique(raw[:, j])) for j in cat)
    mins = raw.min(axis=0)
    maxs = raw.max(axis=0)
    return NormalizationParams(
        tuple(float(v) for v in mins), tuple(float(v) for v in maxs), cat, vocab
    )


def preprocess(records: Sequence[NetflowRecord], params: NormalizationParams | None = None,
               categorical: Sequence[int] = ()) -> tuple[list[NetflowRecord], NormalizationParams]:
    """Min-max scale numeric features and one-hot encode categorical ones.

    Without ``params`` the statistics are fitted on ``records`` (pass the
    training records); pass the returned params to transform test records.
    Endpoints, labels and record order are left alone.
    """
    if not records:
        raise ValueError("preprocess needs a non-empty record list")
    if params is None:
        params = fit_normalization(records, categorical)
    return params.transform(records), params


def is_finite_record(rec: NetflowRecord) -> bool:
    return all(math.isfinite(v) for v in rec.feature_vector())
