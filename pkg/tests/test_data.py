import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gnnids.data import (EmptyDatasetError, Label, RecordError, RowError, SchemaError, SplitError,
                         SynthConfig, fit_normalization, load_csv, make_split, preprocess,
                         read_table, synth_generate, write_csv)
from gnnids.data.io import load_schema
from gnnids.data.synth import compromised_ips

from conftest import rec

GENERIC_HEADER = ("src_ip,src_port,dst_ip,dst_port,duration,in_bytes,out_bytes,tot_packets,"
                  "label,attack_name")


# records --------------------------------------------------------------------

def test_record_validation():
    rec().validate()
    with pytest.raises(RecordError, match="tot_packets"):
        rec(packets=0).validate()
    with pytest.raises(RecordError, match="negative"):
        rec(duration=-1.0).validate()
    with pytest.raises(RecordError, match="src_port"):
        rec(sport=70000).validate()
    with pytest.raises(RecordError, match="finite"):
        rec(in_bytes=math.inf).validate()


def test_label_parse():
    assert Label.parse("malicious") is Label.MALICIOUS
    assert Label.parse(" Benign ") is Label.BENIGN
    assert str(Label.MALICIOUS) == "malicious"
    with pytest.raises(ValueError):
        Label.parse("maybe")


# CSV ------------------------------------------------------------------------

def test_three_row_roundtrip(tmp_path):
    rows = [rec(duration=0.1, extra=(1.5,)),
            rec("192.168.1.1", 5, "8.8.8.8", 53, 2.25, 7, 0, 1, (0.3,), Label.MALICIOUS, "neris"),
            rec(duration=1e-7, in_bytes=123456789, extra=(float(2 ** 53),))]
    path = tmp_path / "three.csv"
    write_csv(rows, path, ("x_a",))
    back = load_csv(path)
    assert back == rows


def test_zero_row_file(tmp_path):
    path = tmp_path / "empty_rows.csv"
    path.write_text(GENERIC_HEADER + "\n")
    assert load_csv(path) == []


def test_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(EmptyDatasetError):
        load_csv(path)


def test_missing_and_extra_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(GENERIC_HEADER.replace(",duration", "") + "\n")
    with pytest.raises(SchemaError, match="'duration'"):
        load_csv(path)
    path.write_text(GENERIC_HEADER + ",colour\n")
    with pytest.raises(SchemaError, match="'colour'"):
        load_csv(path)


def test_row_error_has_line_number(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(GENERIC_HEADER + "\n"
                    "1.1.1.1,1,2.2.2.2,2,0.5,10,10,1,benign,\n"
                    "1.1.1.1,1,2.2.2.2,2,abc,10,10,1,benign,\n")
    with pytest.raises(RowError) as err:
        load_csv(path)
    assert err.value.line == 3
    assert "duration" in str(err.value)


def test_categorical_cells_are_stable_across_rewrites(tmp_path):
    path = tmp_path / "cat.csv"
    path.write_text(GENERIC_HEADER.replace("tot_packets,", "tot_packets,cat_proto,") + "\n"
                    "1.1.1.1,1,2.2.2.2,2,0.5,10,10,1,tcp,benign,\n"
                    "1.1.1.1,1,2.2.2.2,2,0.5,10,10,1,6,benign,\n")
    first = read_table(path)
    assert first.categorical == frozenset({"cat_proto"})
    assert first.records[1].extra_features == (6.0,)
    again = tmp_path / "again.csv"
    write_csv(first.records, again, first.extra_names)
    assert read_table(again).records == first.records


def test_ctu13_schema(tmp_path):
    path = tmp_path / "ctu.binetflow"
    path.write_text(
        "StartTime,Dur,Proto,SrcAddr,Sport,Dir,DstAddr,Dport,State,sTos,dTos,TotPkts,TotBytes,SrcBytes,Label\n"
        "2011/08/10 09:46:53,3.5,tcp,147.32.84.165,1027,->,60.190.223.75,888,FSPA_FSPA,0,0,9,1000,600,flow=From-Botnet-V42-TCP-Attempt\n"
        "2011/08/10 09:46:54,0.0,udp,147.32.84.2,53,<->,147.32.84.165,0x0035,CON,0,,2,150,75,flow=Background-UDP-Established\n")
    recs = load_csv(path, "ctu13")
    assert [r.label for r in recs] == [Label.MALICIOUS, Label.BENIGN]
    assert recs[0].in_bytes == 600 and recs[0].out_bytes == 400
    assert recs[1].dst_port == 53
    assert recs[0].attack_name == "ctu13"


def test_builtin_schemas_load():
    for name in ("generic", "ctu13", "toniot"):
        assert load_schema(name).columns
    with pytest.raises(SchemaError):
        load_schema("nope")


# preprocess -------------------------------------------------------------------

def test_minmax_examples():
    recs = [rec(duration=d) for d in (0.0, 5.0, 10.0)]
    out, params = preprocess(recs)
    assert [r.duration for r in out] == [0.0, 0.5, 1.0]
    test, _ = preprocess([rec(duration=20.0)], params)
    assert test[0].duration == 1.0
    const, _ = preprocess([rec(in_bytes=7) for _ in range(3)])
    assert [r.in_bytes for r in const] == [0.0, 0.0, 0.0]


def test_one_hot_against_train_vocab():
    train = [rec(extra=(6.0, 0.5)), rec(extra=(17.0, 1.0))]
    params = fit_normalization(train, categorical=[0])
    assert params.width_out == 4 + 2 + 1
    m = params.transform_matrix(np.array([[1, 1, 1, 1, 17.0, 0.75], [1, 1, 1, 1, 99.0, 0.75]]))
    assert m[0, 4:6].tolist() == [0.0, 1.0]
    assert m[1, 4:6].tolist() == [0.0, 0.0]   # unseen category: all zeros
    assert m[0, 6] == 0.5


def test_non_finite_is_row_error():
    params = fit_normalization([rec(), rec(duration=3.0)])
    with pytest.raises(RecordError, match="row 1"):
        params.transform_matrix(np.array([[1, 1, 1, 1], [np.nan, 1, 1, 1]]))


@given(seed=st.integers(0, 1000), n=st.integers(1, 30))
@settings(max_examples=30, deadline=None)
def test_preprocess_keeps_identity_fields(seed, n):
    from conftest import random_records
    recs = random_records(np.random.default_rng(seed), n)
    out, _ = preprocess(recs)
    assert len(out) == len(recs)
    for a, b in zip(recs, out):
        assert (a.src, a.dst, a.label, a.attack_name) == (b.src, b.dst, b.label, b.attack_name)
        assert all(0.0 <= v <= 1.0 for v in b.feature_vector())


def test_params_roundtrip():
    params = fit_normalization([rec(extra=(6.0,)), rec(duration=4.0, extra=(17.0,))], [0])
    from gnnids.data.preprocess import NormalizationParams
    assert NormalizationParams.from_dict(params.to_dict()) == params


# split ------------------------------------------------------------------------

def _pool(n_mal, n_ben):
    return ([rec(sport=i, label=Label.MALICIOUS, attack="a") for i in range(n_mal)]
            + [rec(sport=10_000 + i) for i in range(n_ben)])


def _counts(recs):
    mal = sum(r.is_malicious for r in recs)
    return mal, len(recs) - mal


def test_split_example_counts():
    sp = make_split(_pool(100, 5000), "a", 0.8, 10, seed=3)
    assert _counts(sp.train) == (80, 800)
    assert _counts(sp.test) == (20, 200)


def test_split_rejects_degenerate():
    with pytest.raises(SplitError, match="empty"):
        make_split(_pool(10, 200), "a", train_frac=1.0)
    with pytest.raises(SplitError, match="need 100.*have 50"):
        make_split(_pool(10, 50), "a")
    with pytest.raises(SplitError, match="no malicious"):
        make_split(_pool(10, 200), "b")


def test_split_deterministic():
    pool = _pool(30, 400)
    a, b = make_split(pool, "a", seed=5), make_split(pool, "a", seed=5)
    assert a.train == b.train and a.test == b.test
    assert make_split(pool, "a", seed=6).test != a.test


def test_split_sweep_100_seeds():
    pool = _pool(37, 600)
    ids = {id(r) for r in pool}
    for seed in range(100):
        sp = make_split(pool, "a", 0.8, 10, seed)
        tr, te = {id(r) for r in sp.train}, {id(r) for r in sp.test}
        assert not tr & te and tr | te <= ids
        n = len(sp.train) + len(sp.test)
        assert abs(len(sp.train) - 0.8 * n) <= 1
        for side in (sp.train, sp.test):
            mal, ben = _counts(side)
            assert abs(ben - 10 * mal) <= 10  # see decisions ledger: per-class rounding
        m_tr, b_tr = _counts(sp.train)
        m_te, b_te = _counts(sp.test)
        assert (m_tr + m_te, b_tr + b_te) == (37, 370)


def test_split_ratio_exact_when_divisible():
    for seed in range(20):
        sp = make_split(_pool(50, 800), "a", 0.8, 10, seed)
        for side in (sp.train, sp.test):
            mal, ben = _counts(side)
            assert ben == 10 * mal


# synth ------------------------------------------------------------------------

def test_synth_scan_sources_are_compromised():
    cfg = SynthConfig(n_hosts=50, n_compromised=2, malicious_flows=200, attack_pattern="scan")
    recs = synth_generate(cfg)
    comp = set(compromised_ips(cfg))
    assert len(comp) == 2
    mal = [r for r in recs if r.is_malicious]
    assert len(mal) == 200 and {r.src_ip for r in mal} <= comp
    assert len({r.dst for r in mal}) > 20


def test_synth_ddos_single_target():
    recs = synth_generate(SynthConfig(attack_pattern="ddos", seed=4))
    assert len({r.dst_ip for r in recs if r.is_malicious}) == 1


def test_synth_beacon_same_pair():
    recs = synth_generate(SynthConfig(attack_pattern="beacon", seed=4))
    assert len({r.dst for r in recs if r.is_malicious}) == 1


def test_synth_deterministic_and_valid(tmp_path):
    cfg = SynthConfig(seed=11, benign_flows=300, malicious_flows=30)
    a, b = synth_generate(cfg), synth_generate(cfg)
    assert a == b
    for r in a:
        r.validate()
    write_csv(a, tmp_path / "a.csv", ("cat_proto", "cat_state"))
    write_csv(b, tmp_path / "b.csv", ("cat_proto", "cat_state"))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_synth_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(n_hosts=2, n_compromised=2)
    with pytest.raises(ValueError):
        SynthConfig(attack_pattern="worm")
