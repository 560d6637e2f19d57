from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .records import Label, NetflowRecord


class SplitError(ValueError):
    pass


@dataclass
class DatasetSplit:
    train: list[NetflowRecord]
    test: list[NetflowRecord]
    attack_name: str
    seed: int

    def malicious_source_ips(self) -> set[str]:
        return {r.src_ip for r in self.train + self.test if r.label == Label.MALICIOUS}


def make_split(records: Sequence[NetflowRecord], attack_name: str, train_frac: float = 0.8,
               benign_ratio: int = 10, seed: int = 0) -> DatasetSplit:
    """Build one binary collection for ``attack_name`` and split it.

    Every malicious record of the attack is kept; benign records are
    subsampled uniformly without replacement to ``benign_ratio`` per
    malicious one. Each class is split by ``train_frac`` separately so both
    sides keep the ratio. Records keep their input order within each side.
    """
    if train_frac >= 1.0:
        raise SplitError(f"train_frac={train_frac} leaves the test side empty")
    if train_frac <= 0.0:
        raise SplitError(f"train_frac={train_frac} leaves the train side empty")
    if benign_ratio < 1:
        raise SplitError("benign_ratio must be >= 1")
    mal = [i for i, r in enumerate(records)
           if r.label == Label.MALICIOUS and r.attack_name == attack_name]
    ben = [i for i, r in enumerate(records) if r.label == Label.BENIGN]
    if not mal:
        raise SplitError(f"no malicious records for attack {attack_name!r}")
    need = benign_ratio * len(mal)
    if len(ben) < need:
        raise SplitError(
            f"insufficient benign records: need {need} for ratio 1:{benign_ratio}, have {len(ben)}"
        )
    rng = np.random.default_rng(seed)
    ben_pick = np.sort(rng.choice(len(ben), size=need, replace=False))
    ben = [ben[i] for i in ben_pick]

    def halve(idx: list[int]) -> tuple[list[int], list[int]]:
        n_train = int(round(train_frac * len(idx)))
        perm = rng.permutation(len(idx))
        tr = sorted(idx[i] for i in perm[:n_train])
        te = sorted(idx[i] for i in perm[n_train:])
        return tr, te

    mal_tr, mal_te = halve(mal)
    ben_tr, ben_te = halve(ben)
    if not mal_te or not ben_te:
        raise SplitError("test side is empty; lower train_frac or supply more records")
    if not mal_tr or not ben_tr:
        raise SplitError("train side is empty; raise train_frac or supply more records")
    train = [records[i] for i in sorted(mal_tr + ben_tr)]
    test = [records[i] for i in sorted(mal_te + ben_te)]
    return DatasetSplit(train, test, attack_name, int(seed))
