"""Pipeline stages over on-disk artifacts.

Layout under the output directory::

    ingest/    dataset.csv  meta.json
    split/     train.csv  test.csv  meta.json
    models/    normalization.json  egraphsage.npz  linegraphsage.npz  forest.npz  meta.json
    attacks/   <point>.csv ...  manifest.json
    eval/      evaluation.json
    report/    report.json  curves/*.csv  plots/*.svg
    timings.json

Each meta file names its format and version; a stage refuses inputs with a
different version. ``run`` calls the same stage functions in order, so
chaining the subcommands by hand gives identical files.
"""
from __future__ import annotations

import json
import time
from pathlib import Path

from . import attacks as atk
from .config import ExperimentConfig
from .data.io import load_csv, read_table, write_csv
from .data.preprocess import NormalizationParams, fit_normalization, raw_matrix
from .data.records import FlowTable
from .data.split import DatasetSplit, make_split
from .data.synth import synth_table
from .evaluate import (AttackPoint, ExperimentReport, ForestDetector, GnnDetector,
                       attack_plan, score_points)
from .forest import load_forest, rf_fit, save_forest
from .fsutil import atomic_write, write_json
from .graph import build_flow_graph, linearize
from .nn.sage import EDGE_CLASS, NODE_CLASS, init_model
from .nn.serialize import load_model, save_model
from .nn.train import train
from .report import emit_report, load_report

STAGES = ("ingest", "split", "train", "attack", "evaluate", "report")
VERSION = 1
MARKER = "INCOMPLETE"
GNN_MODES = {"egraphsage": EDGE_CLASS, "linegraphsage": NODE_CLASS}


class ArtifactError(RuntimeError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def _meta(fmt: str, **kw) -> dict:
    return {"format": f"gnnids-{fmt}", "version": VERSION, **kw}


def read_meta(path: Path, fmt: str) -> dict:
    if not path.is_file():
        raise ArtifactError(f"{path} not found; run the earlier stage first")
    d = json.loads(path.read_text(encoding="utf-8"))
    if d.get("format") != f"gnnids-{fmt}":
        raise ArtifactError(f"{path}: expected a gnnids-{fmt} artifact, found {d.get('format')!r}")
    if d.get("version") != VERSION:
        raise ArtifactError(f"{path}: produced by an incompatible version "
                            f"({d.get('version')}, this build reads {VERSION})")
    return d


def _categorical_idx(extra_names, categorical) -> list[int]:
    unknown = set(categorical) - set(extra_names)
    if unknown:
        raise ArtifactError(f"categorical column(s) not in dataset: {sorted(unknown)}")
    return [i for i, n in enumerate(extra_names) if n in set(categorical)]


# stages ---------------------------------------------------------------------

def stage_ingest(cfg: ExperimentConfig, out: Path) -> None:
    ds = cfg.dataset
    if ds.source == "csv":
        table = read_table(ds.path, ds.schema)
    else:
        table = synth_table(ds.synth)
    categorical = sorted(table.categorical) if ds.categorical is None else list(ds.categorical)
    _categorical_idx(table.extra_names, categorical)
    write_csv(table.records, out / "ingest" / "dataset.csv", table.extra_names)
    write_json(out / "ingest" / "meta.json", _meta(
        "ingest", dataset=ds.ident, n_records=len(table.records),
        extra_names=list(table.extra_names), categorical=categorical))


def _load_ingest(out: Path) -> tuple[FlowTable, dict]:
    meta = read_meta(out / "ingest" / "meta.json", "ingest")
    records = load_csv(out / "ingest" / "dataset.csv")
    return FlowTable(records, tuple(meta["extra_names"]), frozenset(meta["categorical"])), meta


def stage_split(cfg: ExperimentConfig, out: Path) -> None:
    table, meta = _load_ingest(out)
    sp = make_split(table.records, cfg.attack_name, cfg.train_frac, cfg.benign_ratio, cfg.split_seed)
    write_csv(sp.train, out / "split" / "train.csv", table.extra_names)
    write_csv(sp.test, out / "split" / "test.csv", table.extra_names)
    write_json(out / "split" / "meta.json", _meta(
        "split", attack_name=sp.attack_name, seed=sp.seed, dataset=meta["dataset"],
        mal_source_ips=sorted(sp.malicious_source_ips()),
        extra_names=meta["extra_names"], categorical=meta["categorical"],
        n_train=len(sp.train), n_test=len(sp.test)))


def load_split(out: Path) -> tuple[DatasetSplit, dict]:
    meta = read_meta(out / "split" / "meta.json", "split")
    sp = DatasetSplit(load_csv(out / "split" / "train.csv"), load_csv(out / "split" / "test.csv"),
                      meta["attack_name"], meta["seed"])
    return sp, meta


def stage_train(cfg: ExperimentConfig, out: Path) -> None:
    sp, meta = load_split(out)
    ips = frozenset(meta["mal_source_ips"])
    cat = _categorical_idx(meta["extra_names"], meta["categorical"])
    params = fit_normalization(sp.train, cat)
    mdir = out / "models"
    write_json(mdir / "normalization.json", _meta("normalization", **params.to_dict()))
    feats = params.transform_matrix(raw_matrix(sp.train))
    g = build_flow_graph(sp.train, ips, features=feats)
    models, training = {}, {}
    for name, mode in GNN_MODES.items():
        mcfg = getattr(cfg, name)
        if mcfg is None:
            continue
        model = init_model(mode, g.feature_dim, mcfg)
        rep = train(model, g if mode == EDGE_CLASS else linearize(g))
        save_model(model, mdir / f"{name}.npz")
        models[name] = f"{name}.npz"
        training[name] = {k: v for k, v in rep.to_dict().items() if k != "seconds"}
        _add_timing(out, f"train.{name}", rep.seconds)
    if cfg.forest is not None:
        t0 = time.perf_counter()
        save_forest(rf_fit(sp.train, cfg=cfg.forest), mdir / "forest.npz")
        _add_timing(out, "train.forest", time.perf_counter() - t0)
        models["forest"] = "forest.npz"
    write_json(mdir / "meta.json", _meta("models", models=models, training=training))


def load_detectors(out: Path) -> tuple[list, dict]:
    meta = read_meta(out / "models" / "meta.json", "models")
    norm = read_meta(out / "models" / "normalization.json", "normalization")
    params = NormalizationParams.from_dict(norm)
    split_meta = read_meta(out / "split" / "meta.json", "split")
    ips = frozenset(split_meta["mal_source_ips"])
    dets = []
    for name, fname in meta["models"].items():
        path = out / "models" / fname
        if name == "forest":
            dets.append(ForestDetector(name, load_forest(path)))
        else:
            dets.append(GnnDetector(name, load_model(path), params, ips))
    return dets, meta


def stage_attack(cfg: ExperimentConfig, out: Path) -> None:
    sp, meta = load_split(out)
    adir = out / "attacks"
    existing = {e for r in sp.train for e in (r.src, r.dst)}
    points = []
    for point, result in attack_plan(cfg.grid, sp.test, meta["mal_source_ips"], existing):
        fname = f"{point.key}.csv"
        atk.write_attack_csv(result, adir / fname, meta["extra_names"])
        points.append({"key": point.key, "point": point.to_dict(), "file": fname,
                       "n_added": len(result.added_records)})
    write_json(adir / "manifest.json", _meta(
        "attacks", grid=cfg.grid.to_dict(), points=points, excluded={"u2x": atk.U2X_STATUS}))


def _saved_points(out: Path, manifest: dict):
    for entry in manifest["points"]:
        result = atk.read_attack_result(out / "attacks" / entry["file"])
        yield AttackPoint.from_dict(entry["point"]), result


def stage_evaluate(cfg: ExperimentConfig, out: Path) -> None:
    sp, meta = load_split(out)
    dets, mmeta = load_detectors(out)
    manifest = read_meta(out / "attacks" / "manifest.json", "attacks")
    baseline, curves, variants = score_points(dets, sp.test, _saved_points(out, manifest))
    report = ExperimentReport(meta["dataset"], meta["seed"], cfg.to_dict(), baseline, curves,
                              variants, manifest["excluded"], mmeta["training"])
    write_json(out / "eval" / "evaluation.json", report.to_dict())


def stage_report(cfg: ExperimentConfig, out: Path) -> None:
    emit_report(load_report(out / "eval" / "evaluation.json"), out / "report")


STAGE_FUNCS = {"ingest": stage_ingest, "split": stage_split, "train": stage_train,
               "attack": stage_attack, "evaluate": stage_evaluate, "report": stage_report}


# running ------------------------------------------------------------------------

def _add_timing(out: Path, key: str, seconds: float) -> None:
    path = out / "timings.json"
    data = json.loads(path.read_text()) if path.is_file() else {}
    data[key] = round(seconds, 6)
    write_json(path, data)


def run_stage(stage: str, cfg: ExperimentConfig, out) -> None:
    """Run one stage; on failure leave an INCOMPLETE marker and raise
    StageError tagged with the stage name."""
    if stage not in STAGE_FUNCS:
        raise ValueError(f"unknown stage {stage!r}; choose from {STAGES}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / MARKER
    atomic_write(marker, f"stage {stage} started\n")
    t0 = time.perf_counter()
    try:
        STAGE_FUNCS[stage](cfg, out)
    except Exception as exc:
        atomic_write(marker, f"stage {stage} failed: {type(exc).__name__}: {exc}\n")
        raise StageError(stage, f"{type(exc).__name__}: {exc}") from exc
    _add_timing(out, stage, time.perf_counter() - t0)
    marker.unlink()


def run(cfg: ExperimentConfig, out, until: str | None = None) -> ExperimentReport | None:
    """All stages in order (or up to ``until``); returns the report when the
    evaluate stage ran."""
    out = Path(out)
    last = STAGES.index(until) if until else len(STAGES) - 1
    for stage in STAGES[:last + 1]:
        run_stage(stage, cfg, out)
    if last >= STAGES.index("evaluate"):
        return load_report(out / "eval" / "evaluation.json")
    return None
