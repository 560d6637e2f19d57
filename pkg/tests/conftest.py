import numpy as np
import pytest

from gnnids.data.records import Label, NetflowRecord

ACCEPTANCE_LINES: list[str] = []


def rec(src="10.0.0.1", sport=1000, dst="10.0.0.2", dport=80, duration=1.0, in_bytes=100,
        out_bytes=200, packets=3, extra=(), label=Label.BENIGN, attack=None):
    return NetflowRecord(src, sport, dst, dport, duration, in_bytes, out_bytes, packets,
                         tuple(extra), Label(label), attack)


def random_records(rng, n, n_ips=5, n_ports=3, p_mal=0.3):
    out = []
    for _ in range(n):
        mal = rng.random() < p_mal
        out.append(rec(f"10.0.0.{rng.integers(n_ips)}", int(rng.integers(n_ports)),
                       f"10.0.0.{rng.integers(n_ips)}", int(rng.integers(n_ports)),
                       float(rng.random() * 5), int(rng.integers(2000)), int(rng.integers(2000)),
                       int(rng.integers(1, 50)), label=int(mal), attack="x" if mal else None))
    return out


@pytest.fixture
def make_rec():
    return rec


@pytest.fixture(scope="session")
def scan_split():
    from gnnids.data import SynthConfig, make_split, synth_generate
    return make_split(synth_generate(SynthConfig(seed=0)), "scan", seed=0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
