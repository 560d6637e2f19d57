import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gnnids import attacks as atk
from gnnids.attacks import (AddNodeSpec, AttackError, C2xSpec, FeatureAttackSpec, add_node_attack,
                            c2x_benign, c2x_malicious, feature_attack, feature_sweep,
                            fresh_endpoints, read_attack_result, u2x_attack, write_attack_csv)
from gnnids.data.records import ATTACKABLE, Endpoint, Label
from gnnids.graph import build_flow_graph

from conftest import rec, random_records

MAL = Label.MALICIOUS


def _test_set(seed=0, n=60):
    recs = random_records(np.random.default_rng(seed), n, n_ips=6, n_ports=4)
    recs[0] = dataclasses.replace(recs[0], src_ip="10.0.0.250", label=MAL, attack_name="x")
    recs[1] = dataclasses.replace(recs[1], label=Label.BENIGN, attack_name=None)
    return recs


def _compromised(recs):
    ips = {r.src_ip for r in recs if r.is_malicious}
    return {e for r in recs for e in (r.src, r.dst) if e.ip in ips}


def _endpoints(recs):
    return {e for r in recs for e in (r.src, r.dst)}


# feature attacks -------------------------------------------------------------

def test_sweep_has_135_variants():
    sweep = feature_sweep()
    assert len(atk.FEATURE_GROUPS) == 15 and len(sweep) == 135
    assert len({s.name for s in sweep}) == 135
    assert atk.FEATURE_STEPS[0] == 1 and atk.FEATURE_STEPS[-1] == 1024


def test_duration_plus_one():
    r = rec(duration=2.0, label=MAL, attack="x")
    out = feature_attack([r], FeatureAttackSpec(("duration",), 1)).perturbed_records[0]
    assert out.duration == 3.0
    assert dataclasses.replace(out, duration=2.0) == r


def test_benign_untouched_and_no_targets():
    recs = [rec(), rec(sport=3)]
    res = feature_attack(recs, FeatureAttackSpec(ATTACKABLE, 1024))
    assert res.perturbed_records == recs and res.added_records == []


def test_integral_fields_round():
    r = rec(in_bytes=10, packets=3, duration=0.25, label=MAL, attack="x")
    out = feature_attack([r], FeatureAttackSpec(ATTACKABLE, 2.6)).perturbed_records[0]
    assert (out.in_bytes, out.tot_packets) == (13, 6)
    assert isinstance(out.in_bytes, int)
    assert out.duration == pytest.approx(2.85)


@given(seed=st.integers(0, 10_000), gi=st.integers(0, 14))
@settings(max_examples=30, deadline=None)
def test_feature_attack_monotone_and_exact(seed, gi):
    recs = _test_set(seed, 20)
    group = atk.FEATURE_GROUPS[gi]
    prev = recs
    for step in atk.FEATURE_STEPS:
        out = feature_attack(recs, FeatureAttackSpec(group, step)).perturbed_records
        assert len(out) == len(recs)
        for a, b, p in zip(recs, out, prev):
            assert a.label == b.label and (a.src, a.dst) == (b.src, b.dst)
            for f in ATTACKABLE:
                if a.is_malicious and f in group:
                    assert getattr(b, f) == getattr(a, f) + step
                    assert getattr(b, f) >= getattr(p, f)
                else:
                    assert getattr(b, f) == getattr(a, f)
        prev = out


def test_feature_spec_validation():
    with pytest.raises(AttackError):
        FeatureAttackSpec((), 1)
    with pytest.raises(AttackError):
        FeatureAttackSpec(("colour",), 1)
    with pytest.raises(AttackError):
        FeatureAttackSpec(("duration",), 0)


# C2x ------------------------------------------------------------------------

def test_c2x_benign_counts():
    recs = _test_set()
    comp = {Endpoint("10.0.0.250", p) for p in (1, 2, 3)}
    res = c2x_benign(recs, comp, 2, seed=1)
    assert len(res.added_records) == 6
    assert all(r.label == Label.BENIGN and r.src in comp for r in res.added_records)
    assert sorted(r.src_port for r in res.added_records) == [1, 1, 2, 2, 3, 3]
    assert build_flow_graph(res.perturbed_records).n_edges == len(recs) + 6


def test_c2x_benign_keeps_destinations_and_fields():
    recs = _test_set(2)
    res = c2x_benign(recs, _compromised(recs), 5, seed=3)
    for r, (rule, fid) in zip(res.added_records, res.provenance):
        src = recs[fid]
        assert rule == "c2x_benign" and src.label == Label.BENIGN
        assert dataclasses.replace(r, src_ip=src.src_ip, src_port=src.src_port) == src


@pytest.mark.parametrize("bad", [0, -1, 3, 2.5])
def test_c2x_grid_validation(bad):
    with pytest.raises(AttackError, match="beta"):
        c2x_benign(_test_set(), {Endpoint("10.0.0.250", 1)}, bad)
    with pytest.raises(AttackError):
        C2xSpec("benign", bad)


def test_c2x_override_allows_off_grid():
    res = c2x_benign(_test_set(), {Endpoint("10.0.0.250", 1)}, 3, override=True)
    assert len(res.added_records) == 3
    with pytest.raises(AttackError, match="baseline"):
        c2x_benign(_test_set(), {Endpoint("10.0.0.250", 1)}, 0, override=True)


def test_c2x_empty_pools():
    mal_only = [rec(label=MAL, attack="x")]
    with pytest.raises(AttackError, match="benign pool"):
        c2x_benign(mal_only, {Endpoint("10.0.0.1", 1000)}, 1)
    with pytest.raises(AttackError, match="pools"):
        c2x_malicious([rec()], {Endpoint("10.0.0.1", 1000)}, 1)
    with pytest.raises(AttackError, match="compromised"):
        c2x_benign(_test_set(), set(), 1)


def test_c2x_malicious_counts_and_destinations():
    recs = _test_set(4)
    comp = {Endpoint("10.0.0.250", 1), Endpoint("10.0.0.250", 2)}
    res = c2x_malicious(recs, comp, 5, seed=2)
    assert len(res.added_records) == 10
    ben_dsts = {r.dst for r in recs if r.label == Label.BENIGN}
    mal_ips = {r.src_ip for r in recs if r.is_malicious}
    for r, (rule, fid) in zip(res.added_records, res.provenance):
        assert r.is_malicious and r.dst in ben_dsts and r.src_ip in mal_ips
        assert r.src == recs[fid].src


def test_c2x_malicious_edges_reach_benign_endpoints():
    recs = [rec("1.1.1.1", 1, "2.2.2.2", 2, label=MAL, attack="x"),
            rec("3.3.3.3", 3, "4.4.4.4", 4)]
    res = c2x_malicious(recs, {Endpoint("1.1.1.1", 1)}, 2)
    g = build_flow_graph(res.perturbed_records, {"1.1.1.1"})
    benign_only = g.index[Endpoint("4.4.4.4", 4)]
    new = range(len(recs), g.n_edges)
    assert all(g.src[e] in g.compromised and g.dst[e] == benign_only for e in new)


# add node -------------------------------------------------------------------

def test_add_node_minimal():
    recs = _test_set()
    comp = _compromised(recs)
    res = add_node_attack(recs, comp, _endpoints(recs), AddNodeSpec(1, 1), seed=0)
    assert len(res.added_records) == 1
    r = res.added_records[0]
    assert r.src in comp and r.dst not in _endpoints(recs) and r.label == Label.BENIGN


def test_add_node_full_scale():
    recs = _test_set(5, 200)
    g = build_flow_graph(recs)
    res = add_node_attack(recs, _compromised(recs), _endpoints(recs), AddNodeSpec(1000, 20))
    assert len(res.added_records) == 20_000
    assert len({r.dst for r in res.added_records}) == 1000
    assert build_flow_graph(res.perturbed_records).n_nodes == g.n_nodes + 1000


def test_add_node_clones_benign_flows():
    recs = _test_set(6)
    res = add_node_attack(recs, _compromised(recs), _endpoints(recs), AddNodeSpec(5, 5, seed=9))
    for r, (rule, fid) in zip(res.added_records, res.provenance):
        src = recs[fid]
        assert rule == "add_node" and src.label == Label.BENIGN
        assert dataclasses.replace(r, src_ip=src.src_ip, src_port=src.src_port,
                                   dst_ip=src.dst_ip, dst_port=src.dst_port) == src


def test_fresh_endpoints_from_documentation_ranges():
    import ipaddress
    nets = [ipaddress.ip_network(n) for n in atk.FRESH_NETWORKS]
    eps = fresh_endpoints(50, set(), np.random.default_rng(0))
    assert len(set(eps)) == 50
    for e in eps:
        assert any(ipaddress.ip_address(e.ip) in n for n in nets)
        assert 1024 <= e.port <= 65535


def test_endpoint_exhaustion_with_pool():
    pool = [Endpoint("192.0.2.1", p) for p in range(2000, 2005)]
    existing = set(pool[:2])
    got = fresh_endpoints(3, existing, np.random.default_rng(0), pool)
    assert set(got) == set(pool[2:])
    with pytest.raises(AttackError, match="exhausted"):
        fresh_endpoints(4, existing, np.random.default_rng(0), pool)
    recs = _test_set()
    with pytest.raises(AttackError, match="exhausted"):
        add_node_attack(recs, _compromised(recs), existing, AddNodeSpec(5, 1), pool=pool)


def test_add_node_grid():
    with pytest.raises(AttackError, match="eta"):
        AddNodeSpec(2, 1)
    with pytest.raises(AttackError, match="gamma"):
        AddNodeSpec(1, 2)
    assert AddNodeSpec(2, 2, override=True).eta == 2


# shared properties ------------------------------------------------------------

def _structural(recs, kind, seed):
    comp = _compromised(recs)
    if kind == "benign":
        return c2x_benign(recs, comp, 5, seed)
    if kind == "malicious":
        return c2x_malicious(recs, comp, 5, seed)
    return add_node_attack(recs, comp, _endpoints(recs), AddNodeSpec(10, 5, seed))


@pytest.mark.parametrize("kind", ["benign", "malicious", "add_node"])
@given(seed=st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_addition_only_and_deterministic(kind, seed):
    recs = _test_set(seed, 40)
    snapshot = list(recs)
    res = _structural(recs, kind, seed)
    assert recs == snapshot
    assert res.perturbed_records[:len(recs)] == recs
    assert res.perturbed_records[len(recs):] == res.added_records
    assert res.n_original == len(recs) and len(res.provenance) == len(res.added_records)
    again = _structural(recs, kind, seed)
    assert again.added_records == res.added_records and again.provenance == res.provenance
    g0, g1 = build_flow_graph(recs), build_flow_graph(res.perturbed_records)
    assert g1.nodes[:g0.n_nodes] == g0.nodes
    assert np.array_equal(g1.src[:g0.n_edges], g0.src)


def test_sampling_with_replacement_only_when_needed():
    recs = [rec("1.1.1.1", 1, "2.2.2.2", 2, label=MAL, attack="x")] + \
           [rec("3.3.3.3", i, "4.4.4.4", 4) for i in range(10)]
    res = c2x_benign(recs, {Endpoint("1.1.1.1", 1)}, 10)
    assert len({fid for _, fid in res.provenance}) == 10
    res = c2x_benign(recs, {Endpoint("1.1.1.1", 1)}, 20)
    assert len(res.added_records) == 20


def test_u2x_is_excluded():
    res = u2x_attack()
    assert res.status == "excluded: anti-spoofing assumption"
    assert res.added_records == [] and atk.U2xSpec().status == res.status


def test_csv_roundtrip_with_provenance(tmp_path):
    recs = [dataclasses.replace(r, extra_features=(float(i),)) for i, r in enumerate(_test_set(7, 30))]
    res = c2x_benign(recs, _compromised(recs), 2, seed=1)
    write_attack_csv(res, tmp_path / "a.csv", ("x_k",))
    back = read_attack_result(tmp_path / "a.csv")
    assert back.perturbed_records == res.perturbed_records
    assert back.added_records == res.added_records
    assert back.provenance == res.provenance
    plain = feature_attack(recs, FeatureAttackSpec(("duration",), 4))
    write_attack_csv(plain, tmp_path / "f.csv", ("x_k",))
    assert read_attack_result(tmp_path / "f.csv").added_records == []
