"""Problem-space evasion attacks on a test netflow set.

Structural attacks only append records; the original list is always a prefix
of ``AttackResult.perturbed_records``. Every added record is a copy of a real
test record with endpoint fields substituted. Provenance for an added record
is ``(rule, flow_id)`` where ``flow_id`` is the position of the copied record
in the input list.

The feature attack edits the four attackable fields of malicious records in
raw (unscaled) units and adds nothing.
"""
from __future__ import annotations

import dataclasses
import ipaddress
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data.io import read_attack_csv, write_csv
from .data.records import ATTACKABLE, Endpoint, Label, NetflowRecord

FEATURE_STEPS = (1, 2, 4, 8, 16, 64, 256, 512, 1024)
FEATURE_GROUPS = tuple(c for k in range(1, 5) for c in itertools.combinations(ATTACKABLE, k))
C2X_GRID = (1, 2, 5, 10, 20)
ETA_GRID = (1, 5, 10, 100, 1000)
GAMMA_GRID = (1, 5, 20)

# documentation prefixes never routed on the internet
FRESH_NETWORKS = ("192.0.2.0/24", "198.51.100.0/24", "203.0.113.0/24")
FRESH_PORTS = (1024, 65535)

U2X_STATUS = "excluded: anti-spoofing assumption"
_INTEGRAL = frozenset({"in_bytes", "out_bytes", "tot_packets"})


class AttackError(ValueError):
    pass


def _check_grid(name: str, value: int, grid: Sequence[int], override: bool) -> None:
    if int(value) != value or value < 1:
        raise AttackError(f"{name}={value} must be a positive integer (0 is the unattacked baseline)")
    if not override and value not in grid:
        raise AttackError(f"{name}={value} not in grid {tuple(grid)}; pass override to allow it")


@dataclass(frozen=True)
class FeatureAttackSpec:
    group: tuple[str, ...]
    step_value: float

    def __post_init__(self):
        group = tuple(self.group)
        if not group:
            raise AttackError("feature group must be non-empty")
        bad = [f for f in group if f not in ATTACKABLE]
        if bad:
            raise AttackError(f"unknown attackable feature(s) {bad}")
        if len(set(group)) != len(group):
            raise AttackError("feature group has duplicates")
        if not self.step_value > 0:
            raise AttackError("step_value must be positive")
        object.__setattr__(self, "group", group)

    @property
    def name(self) -> str:
        return "+".join(self.group) + f"@{self.step_value:g}"


@dataclass(frozen=True)
class C2xSpec:
    variant: str            # "benign" (beta) or "malicious" (theta)
    count_per_node: int
    seed: int = 0
    override: bool = False

    def __post_init__(self):
        if self.variant not in ("benign", "malicious"):
            raise AttackError("C2x variant must be 'benign' or 'malicious'")
        _check_grid("beta" if self.variant == "benign" else "theta",
                    self.count_per_node, C2X_GRID, self.override)


@dataclass(frozen=True)
class AddNodeSpec:
    eta: int
    gamma: int
    seed: int = 0
    override: bool = False

    def __post_init__(self):
        _check_grid("eta", self.eta, ETA_GRID, self.override)
        _check_grid("gamma", self.gamma, GAMMA_GRID, self.override)


@dataclass(frozen=True)
class U2xSpec:
    """Spoofed-source edge addition. Listed for completeness, never run."""
    status: str = U2X_STATUS


@dataclass
class AttackResult:
    perturbed_records: list[NetflowRecord]
    added_records: list[NetflowRecord]
    provenance: list[tuple[str, int]]
    status: str = "ok"

    @property
    def n_original(self) -> int:
        return len(self.perturbed_records) - len(self.added_records)


def feature_sweep(schedule: Sequence[float] = FEATURE_STEPS) -> list[FeatureAttackSpec]:
    """All group x step combinations, groups ordered by size."""
    return [FeatureAttackSpec(g, s) for g in FEATURE_GROUPS for s in schedule]


def feature_attack(test: Sequence[NetflowRecord], spec: FeatureAttackSpec) -> AttackResult:
    out = []
    for r in test:
        if r.label != Label.MALICIOUS:
            out.append(r)
            continue
        changes = {}
        for f in spec.group:
            v = getattr(r, f) + spec.step_value
            changes[f] = int(round(v)) if f in _INTEGRAL else float(v)
        out.append(dataclasses.replace(r, **changes))
    return AttackResult(out, [], [])


def _sample(rng, pool_size: int, k: int) -> np.ndarray:
    return rng.choice(pool_size, size=k, replace=pool_size < k)


def _ordered(endpoints: Iterable[Endpoint]) -> list[Endpoint]:
    return sorted(set(endpoints), key=lambda e: (ipaddress.ip_address(e.ip), e.port))


def _result(test, added, prov) -> AttackResult:
    return AttackResult(list(test) + added, added, prov)


def c2x_benign(test: Sequence[NetflowRecord], compromised: Iterable[Endpoint], beta: int,
               seed: int = 0, override: bool = False) -> AttackResult:
    """For every compromised endpoint, copy ``beta`` benign test flows and
    make it their source."""
    _check_grid("beta", beta, C2X_GRID, override)
    comp = _ordered(compromised)
    if not comp:
        raise AttackError("no compromised endpoints")
    pool = [i for i, r in enumerate(test) if r.label == Label.BENIGN]
    if not pool:
        raise AttackError("empty benign pool")
    rng = np.random.default_rng(seed)
    added, prov = [], []
    for ep in comp:
        for j in _sample(rng, len(pool), beta):
            i = pool[j]
            added.append(dataclasses.replace(test[i], src_ip=ep.ip, src_port=ep.port))
            prov.append(("c2x_benign", i))
    return _result(test, added, prov)


def c2x_malicious(test: Sequence[NetflowRecord], compromised: Iterable[Endpoint], theta: int,
                  seed: int = 0, override: bool = False) -> AttackResult:
    """Copy ``theta * |C|`` malicious test flows, sources unchanged, each
    redirected to the destination of a sampled benign flow."""
    _check_grid("theta", theta, C2X_GRID, override)
    comp = _ordered(compromised)
    if not comp:
        raise AttackError("no compromised endpoints")
    mal = [i for i, r in enumerate(test) if r.label == Label.MALICIOUS]
    ben = [i for i, r in enumerate(test) if r.label == Label.BENIGN]
    if not mal or not ben:
        raise AttackError("c2x_malicious needs non-empty malicious and benign pools")
    n = theta * len(comp)
    rng = np.random.default_rng(seed)
    src_pick = _sample(rng, len(mal), n)
    dst_pick = _sample(rng, len(ben), n)
    added, prov = [], []
    for a, b in zip(src_pick, dst_pick):
        m, d = test[mal[a]], test[ben[b]]
        added.append(dataclasses.replace(m, dst_ip=d.dst_ip, dst_port=d.dst_port))
        prov.append(("c2x_malicious", mal[a]))
    return _result(test, added, prov)


def _fresh_space():
    nets = [ipaddress.ip_network(n) for n in FRESH_NETWORKS]
    hosts = [str(h) for net in nets for h in net.hosts()]
    return hosts, FRESH_PORTS[1] - FRESH_PORTS[0] + 1


def fresh_endpoints(n: int, existing: Iterable[Endpoint], rng: np.random.Generator,
                    pool: Sequence[Endpoint] | None = None) -> list[Endpoint]:
    """``n`` distinct endpoints absent from ``existing``.

    By default they come from the documentation address blocks and
    unprivileged ports; ``pool`` restricts the choice to an explicit list.
    """
    existing = set(existing)
    if pool is not None:
        free = [e for e in dict.fromkeys(pool) if e not in existing]
        if len(free) < n:
            raise AttackError(f"endpoint space exhausted: need {n} fresh endpoints, {len(free)} available")
        return [free[i] for i in rng.choice(len(free), size=n, replace=False)]
    hosts, n_ports = _fresh_space()
    host_set = set(hosts)
    taken = sum(1 for e in existing if e.ip in host_set and FRESH_PORTS[0] <= e.port <= FRESH_PORTS[1])
    if len(hosts) * n_ports - taken < n:
        raise AttackError(f"endpoint space exhausted: need {n} fresh endpoints")
    out, seen = [], set()
    while len(out) < n:
        ep = Endpoint(hosts[int(rng.integers(len(hosts)))],
                      int(rng.integers(FRESH_PORTS[0], FRESH_PORTS[1] + 1)))
        if ep in existing or ep in seen:
            continue
        seen.add(ep)
        out.append(ep)
    return out


def add_node_attack(test: Sequence[NetflowRecord], compromised: Iterable[Endpoint],
                    existing: Iterable[Endpoint], spec: AddNodeSpec, seed: int | None = None,
                    pool: Sequence[Endpoint] | None = None) -> AttackResult:
    """Create ``eta`` new endpoints and send ``gamma`` copied benign flows to
    each from compromised endpoints drawn per flow."""
    comp = _ordered(compromised)
    if not comp:
        raise AttackError("no compromised endpoints")
    ben = [i for i, r in enumerate(test) if r.label == Label.BENIGN]
    if not ben:
        raise AttackError("empty benign pool")
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    new_nodes = fresh_endpoints(spec.eta, existing, rng, pool)
    added, prov = [], []
    for node in new_nodes:
        picks = _sample(rng, len(ben), spec.gamma)
        srcs = rng.integers(len(comp), size=spec.gamma)
        for j, s in zip(picks, srcs):
            i = ben[j]
            added.append(dataclasses.replace(test[i], src_ip=comp[s].ip, src_port=comp[s].port,
                                             dst_ip=node.ip, dst_port=node.port))
            prov.append(("add_node", i))
    return _result(test, added, prov)


def u2x_attack(*_args, **_kwargs) -> AttackResult:
    return AttackResult([], [], [], status=U2X_STATUS)


def write_attack_csv(result: AttackResult, path: str | Path, extra_names=None) -> None:
    """Generic CSV plus a ``provenance`` column: empty for original rows,
    ``rule:flow_id`` for added ones."""
    prov = [""] * result.n_original + [f"{rule}:{fid}" for rule, fid in result.provenance]
    write_csv(result.perturbed_records, path, extra_names, provenance=prov)


def read_attack_result(path: str | Path) -> AttackResult:
    table, prov = read_attack_csv(path)
    added_at = [i for i, p in enumerate(prov) if p]
    if added_at and added_at != list(range(added_at[0], len(prov))):
        raise AttackError(f"{path}: added rows must follow all original rows")
    parsed = []
    for i in added_at:
        rule, fid = prov[i].rsplit(":", 1)
        parsed.append((rule, int(fid)))
    records = list(table.records)
    return AttackResult(records, records[len(records) - len(added_at):] if added_at else [], parsed)
