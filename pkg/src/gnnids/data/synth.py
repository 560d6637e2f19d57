"""Desk-scale labeled netflow generator.

Hosts live in 10.0.0.0/16 and expose a few well-known services. Benign
traffic is client/server: an ephemeral client port talks to a service
endpoint chosen by a Zipf popularity law. Sizes and durations are log-normal
with the fixed parameters below; a small share of benign flows are bulk
transfers (heavy tail) or failed connection attempts whose end state is
drawn from ``FAILED_STATES``.

Attack patterns:

* ``scan``   each compromised host probes service endpoints from one fixed
  source port (nmap-style port reuse), mostly hitting open services and
  occasionally closed ports.
* ``ddos``   every compromised host floods one victim service with short
  flows from fresh ephemeral ports.
* ``beacon`` every compromised host calls an external C2 endpoint at a fixed
  period with near-constant flow sizes.

Extra features are two categorical columns: ``cat_proto`` (6 tcp, 17 udp)
and ``cat_state`` (see ``STATES``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .records import FlowTable, Label, NetflowRecord

PATTERNS = ("scan", "ddos", "beacon")
EXTRA_NAMES = ("cat_proto", "cat_state")
CATEGORICAL = frozenset(EXTRA_NAMES)

TCP, UDP = 6, 17
# connection state codes (zeek-like)
STATES = {"SF": 0, "S0": 1, "REJ": 2, "RSTO": 3}

SERVICE_PORTS = (22, 53, 80, 123, 443, 445, 3306, 3389, 8080)
UDP_PORTS = frozenset({53, 123})
SERVICES_PER_HOST = (1, 3)
ZIPF_EXPONENT = 1.1
EPHEMERAL = (32768, 60999)

# benign log-normal parameters (mu, sigma) of the natural log
BENIGN_DURATION = (0.0, 1.4)       # seconds, median 1 s
BENIGN_IN_BYTES = (6.5, 1.2)       # median ~665 B
BENIGN_OUT_BYTES = (8.0, 1.6)      # median ~3 kB
BENIGN_PACKETS = (2.3, 0.8)        # median ~10
BULK_SHARE = 0.03
BULK_DURATION = (6.0, 0.8)         # ~7 min
BULK_BYTES = (15.0, 1.0)           # ~3 MB
BULK_PACKETS = (8.5, 0.8)          # ~5000
FAILED_SHARE = 0.04                # handshakes stretched by SYN retransmissions
FAILED_STATES = ("S0", "REJ", "RSTO")

SCAN_SOURCE_PORTS = 1              # source ports reused per scanning host
SCAN_OPEN_SHARE = 0.8              # probes that hit an existing service
SCAN_PROBE_PORTS = SERVICE_PORTS

C2_ENDPOINT = ("172.16.99.1", 8443)
BEACON_PERIOD = 30.0


@dataclass(frozen=True)
class SynthConfig:
    n_hosts: int = 50
    n_compromised: int = 2
    benign_flows: int = 2000
    malicious_flows: int = 200
    attack_pattern: str = "scan"
    seed: int = 0

    def __post_init__(self):
        for name in ("n_hosts", "n_compromised", "benign_flows", "malicious_flows"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_compromised >= self.n_hosts:
            raise ValueError("n_compromised must be smaller than n_hosts")
        if self.attack_pattern not in PATTERNS:
            raise ValueError(f"attack_pattern must be one of {PATTERNS}")
        if self.n_hosts > 65000:
            raise ValueError("n_hosts too large for 10.0.0.0/16")


def host_ip(i: int) -> str:
    return f"10.0.{(i + 1) // 256}.{(i + 1) % 256}"


def _lognormal(rng, params, size=None):
    return rng.lognormal(params[0], params[1], size)


def _ephemeral(rng) -> int:
    return int(rng.integers(EPHEMERAL[0], EPHEMERAL[1] + 1))


class _Network:
    def __init__(self, cfg: SynthConfig, rng: np.random.Generator):
        self.n = cfg.n_hosts
        self.compromised = sorted(int(i) for i in rng.choice(self.n, cfg.n_compromised, replace=False))
        self.services: list[tuple[int, int]] = []
        for h in range(self.n):
            k = int(rng.integers(SERVICES_PER_HOST[0], SERVICES_PER_HOST[1] + 1))
            for p in sorted(rng.choice(SERVICE_PORTS, size=k, replace=False)):
                self.services.append((h, int(p)))
        ranks = rng.permutation(len(self.services)) + 1
        w = 1.0 / ranks ** ZIPF_EXPONENT
        self.popularity = w / w.sum()
        self.open = set(self.services)


def _handshake(state: str, syns: int) -> tuple[int, int, int]:
    """(in_bytes, out_bytes, packets) of a short TCP exchange: ``syns`` SYNs
    of 44 bytes, answered by nothing (S0), a 40-byte RST (REJ) or a 44-byte
    SYN/ACK that the client resets (RSTO)."""
    if state == "S0":
        return 44 * syns, 0, syns
    if state == "REJ":
        return 44 * syns, 40, syns + 1
    return 44 * syns + 40, 44, syns + 2


def _benign(net: _Network, rng) -> NetflowRecord:
    sh, sp = net.services[int(rng.choice(len(net.services), p=net.popularity))]
    ch = int(rng.integers(net.n - 1))
    if ch >= sh:
        ch += 1
    proto = UDP if sp in UDP_PORTS else TCP
    u = rng.random()
    if u < FAILED_SHARE and proto == TCP:
        # a handshake that only completes (or fails) after SYN retransmissions
        tries = int(rng.integers(2, 4))
        dur = float(sum(3.0 * 2 ** k for k in range(tries - 1)) + rng.uniform(0.0, 0.5))
        state = FAILED_STATES[int(rng.integers(len(FAILED_STATES)))]
        ib, ob, pk = _handshake(state, tries)
        return NetflowRecord(host_ip(ch), _ephemeral(rng), host_ip(sh), sp, round(dur, 6),
                             ib, ob, pk, (float(proto), float(STATES[state])),
                             Label.BENIGN, None)
    if u < FAILED_SHARE + BULK_SHARE:
        dur = float(_lognormal(rng, BULK_DURATION))
        ib = int(_lognormal(rng, BENIGN_IN_BYTES) * 10)
        ob = int(_lognormal(rng, BULK_BYTES))
        pk = max(4, int(_lognormal(rng, BULK_PACKETS)))
    else:
        dur = float(_lognormal(rng, BENIGN_DURATION))
        ib = int(_lognormal(rng, BENIGN_IN_BYTES))
        ob = int(_lognormal(rng, BENIGN_OUT_BYTES))
        pk = max(2, int(round(_lognormal(rng, BENIGN_PACKETS))))
    if proto == UDP:
        dur = dur / 50.0
        pk = max(1, pk // 4)
        ob = ob // 8
    return NetflowRecord(host_ip(ch), _ephemeral(rng), host_ip(sh), sp, round(dur, 6),
                         max(ib, 28), max(ob, 0), pk, (float(proto), float(STATES["SF"])),
                         Label.BENIGN, None)


def _scan_flows(net: _Network, cfg: SynthConfig, rng) -> list[NetflowRecord]:
    sports = {c: [_ephemeral(rng) for _ in range(SCAN_SOURCE_PORTS)] for c in net.compromised}
    out = []
    for _ in range(cfg.malicious_flows):
        c = net.compromised[int(rng.integers(len(net.compromised)))]
        sport = sports[c][int(rng.integers(SCAN_SOURCE_PORTS))]
        if rng.random() < SCAN_OPEN_SHARE:
            while True:
                th, tp = net.services[int(rng.integers(len(net.services)))]
                if th != c:
                    break
        else:
            th = int(rng.integers(net.n - 1))
            if th >= c:
                th += 1
            tp = int(rng.choice(SCAN_PROBE_PORTS))
        proto = UDP if tp in UDP_PORTS else TCP
        dur = round(float(rng.exponential(0.002)), 6)
        state = "RSTO" if (th, tp) in net.open else "REJ"
        ib, ob, pk = _handshake(state, 1)
        out.append(NetflowRecord(host_ip(c), sport, host_ip(th), tp, dur, ib, ob, pk,
                                 (float(proto), float(STATES[state])), Label.MALICIOUS, "scan"))
    return out


def _ddos_flows(net: _Network, cfg: SynthConfig, rng) -> list[NetflowRecord]:
    candidates = [s for s in net.services if s[0] not in net.compromised and s[1] == 80]
    if not candidates:
        candidates = [s for s in net.services if s[0] not in net.compromised]
    vh, vp = candidates[int(rng.integers(len(candidates)))]
    out = []
    for _ in range(cfg.malicious_flows):
        c = net.compromised[int(rng.integers(len(net.compromised)))]
        dur = round(float(rng.exponential(0.05)), 6)
        pk = int(rng.integers(1, 4))
        out.append(NetflowRecord(host_ip(c), _ephemeral(rng), host_ip(vh), vp, dur,
                                 60 * pk, 0 if pk == 1 else 60, pk,
                                 (float(TCP), float(STATES["S0"] if pk == 1 else STATES["SF"])),
                                 Label.MALICIOUS, "ddos"))
    return out


def _beacon_flows(net: _Network, cfg: SynthConfig, rng) -> list[NetflowRecord]:
    out = []
    for k in range(cfg.malicious_flows):
        c = net.compromised[k % len(net.compromised)]
        dur = round(0.4 + float(rng.normal(0.0, 0.01)), 6)
        ib = 310 + int(rng.integers(-4, 5))
        ob = 220 + int(rng.integers(-4, 5))
        out.append(NetflowRecord(host_ip(c), _ephemeral(rng), C2_ENDPOINT[0], C2_ENDPOINT[1],
                                 max(dur, 0.0), ib, ob, 6, (float(TCP), float(STATES["SF"])),
                                 Label.MALICIOUS, "beacon"))
    return out


_MALICIOUS = {"scan": _scan_flows, "ddos": _ddos_flows, "beacon": _beacon_flows}


def synth_generate(cfg: SynthConfig) -> list[NetflowRecord]:
    """Generate benign then malicious flows, interleaved by a seeded shuffle."""
    rng = np.random.default_rng(cfg.seed)
    net = _Network(cfg, rng)
    records = [_benign(net, rng) for _ in range(cfg.benign_flows)]
    records += _MALICIOUS[cfg.attack_pattern](net, cfg, rng)
    order = rng.permutation(len(records))
    return [records[i] for i in order]


def synth_table(cfg: SynthConfig) -> FlowTable:
    return FlowTable(synth_generate(cfg), EXTRA_NAMES, CATEGORICAL)


def compromised_ips(cfg: SynthConfig) -> list[str]:
    rng = np.random.default_rng(cfg.seed)
    return [host_ip(i) for i in _Network(cfg, rng).compromised]
