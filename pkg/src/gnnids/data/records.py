from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence

ATTACKABLE = ("duration", "in_bytes", "out_bytes", "tot_packets")


class Label(IntEnum):
    BENIGN = 0
    MALICIOUS = 1

    @classmethod
    def parse(cls, text) -> "Label":
        if isinstance(text, Label):
            return text
        key = str(text).strip().lower()
        if key in ("benign", "0", "normal"):
            return cls.BENIGN
        if key in ("malicious", "1", "attack"):
            return cls.MALICIOUS
        raise ValueError(f"unknown label {text!r}")

    def __str__(self) -> str:
        return self.name.lower()


class RecordError(ValueError):
    """A netflow row violates the record invariants."""


@dataclass(frozen=True)
class Endpoint:
    ip: str
    port: int

    def __str__(self) -> str:
        return f"{self.ip}:{self.port}"


@dataclass(frozen=True)
class NetflowRecord:
    """One exported flow.

    After ``preprocess`` the four numeric fields and ``extra_features`` hold
    scaled values; only freshly loaded or generated records are expected to
    satisfy ``validate``.
    """

    src_ip: str
    src_port: int
    dst_ip: str
    dst_port: int
    duration: float
    in_bytes: float
    out_bytes: float
    tot_packets: float
    extra_features: tuple = ()
    label: Label = Label.BENIGN
    attack_name: str | None = None

    @property
    def src(self) -> Endpoint:
        return Endpoint(self.src_ip, self.src_port)

    @property
    def dst(self) -> Endpoint:
        return Endpoint(self.dst_ip, self.dst_port)

    @property
    def is_malicious(self) -> bool:
        return self.label == Label.MALICIOUS

    def feature_vector(self) -> tuple:
        return (self.duration, self.in_bytes, self.out_bytes, self.tot_packets) + tuple(
            self.extra_features
        )

    def validate(self) -> None:
        for name in ("src_port", "dst_port"):
            port = getattr(self, name)
            if not 0 <= port <= 65535:
                raise RecordError(f"{name}={port} outside 0..65535")
        for name in ATTACKABLE:
            v = getattr(self, name)
            if not math.isfinite(v):
                raise RecordError(f"{name} is not finite")
            if v < 0:
                raise RecordError(f"{name}={v} is negative")
        if self.tot_packets < 1:
            raise RecordError(f"tot_packets={self.tot_packets} < 1")
        for v in self.extra_features:
            if not math.isfinite(v):
                raise RecordError("extra feature is not finite")


@dataclass
class FlowTable:
    """Records plus the names of their extra feature columns."""

    records: list[NetflowRecord]
    extra_names: tuple[str, ...] = ()
    categorical: frozenset[str] = field(default_factory=frozenset)

    def categorical_indices(self) -> tuple[int, ...]:
        return tuple(i for i, n in enumerate(self.extra_names) if n in self.categorical)

    def __len__(self) -> int:
        return len(self.records)


def check_feature_width(records: Sequence[NetflowRecord]) -> int:
    widths = {len(r.extra_features) for r in records}
    if len(widths) > 1:
        raise RecordError(f"inconsistent feature vector lengths: {sorted(widths)}")
    return 4 + (widths.pop() if widths else 0)


def malicious_source_ips(records) -> set[str]:
    return {r.src_ip for r in records if r.label == Label.MALICIOUS}
