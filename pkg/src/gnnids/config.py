"""Experiment configuration from an INI file.

Example::

    [experiment]
    name = synth-scan
    seed = 0
    attack_name = scan

    [dataset]
    source = synth            ; or csv (needs path and schema)
    n_hosts = 50

    [egraphsage]
    epochs = 200

    [attacks]
    beta = 1, 2, 5, 10, 20

Every section except [experiment] is optional. Per-section ``seed`` keys
default to the experiment seed.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .data.synth import SynthConfig
from .evaluate import AttackGrid
from .forest import ForestConfig
from .nn.sage import SageConfig
from . import attacks as atk


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetSource:
    source: str = "synth"
    path: str | None = None
    schema: str = "generic"
    categorical: tuple[str, ...] | None = None
    synth: SynthConfig = field(default_factory=SynthConfig)

    def to_dict(self) -> dict:
        d = {"source": self.source}
        if self.source == "csv":
            d.update(path=self.path, schema=self.schema,
                     categorical=None if self.categorical is None else list(self.categorical))
        else:
            d["synth"] = dict(self.synth.__dict__)
            if self.categorical is not None:
                d["categorical"] = list(self.categorical)
        return d

    @property
    def ident(self) -> str:
        if self.source == "csv":
            return f"csv:{Path(self.path).name}:{self.schema}"
        s = self.synth
        return (f"synth:{s.attack_pattern}:hosts={s.n_hosts}:compromised={s.n_compromised}"
                f":benign={s.benign_flows}:malicious={s.malicious_flows}:seed={s.seed}")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    seed: int = 0
    attack_name: str = "scan"
    dataset: DatasetSource = field(default_factory=DatasetSource)
    train_frac: float = 0.8
    benign_ratio: int = 10
    split_seed: int = 0
    egraphsage: SageConfig | None = field(default_factory=SageConfig)
    linegraphsage: SageConfig | None = field(default_factory=SageConfig)
    forest: ForestConfig | None = field(default_factory=ForestConfig)
    grid: AttackGrid = field(default_factory=AttackGrid)

    def to_dict(self) -> dict:
        """Everything needed to rerun, without output locations."""
        def opt(c):
            return None if c is None else dict(c.__dict__)
        return {
            "name": self.name, "seed": self.seed, "attack_name": self.attack_name,
            "dataset": self.dataset.to_dict(),
            "split": {"train_frac": self.train_frac, "benign_ratio": self.benign_ratio,
                      "seed": self.split_seed},
            "egraphsage": opt(self.egraphsage), "linegraphsage": opt(self.linegraphsage),
            "forest": opt(self.forest), "attacks": self.grid.to_dict(),
        }


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in _list(text))


def _list(text: str) -> list[str]:
    return [v.strip() for v in text.replace("\n", ",").split(",") if v.strip()]


def _get(sec, key, conv, default):
    if sec is None or key not in sec:
        return default
    raw = sec[key].strip()
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key} = {raw!r}: {exc}") from exc


def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _opt_int(text: str):
    return None if text.lower() in ("", "none") else int(text)


_KNOWN = {
    "experiment": {"name", "seed", "attack_name"},
    "dataset": {"source", "path", "schema", "categorical", "n_hosts", "n_compromised",
                "benign_flows", "malicious_flows", "attack_pattern", "seed"},
    "split": {"train_frac", "benign_ratio", "seed"},
    "egraphsage": {"enabled", "hidden_dim", "n_layers", "learning_rate", "epochs", "seed",
                   "class_weight", "neighbor_cap"},
    "forest": {"enabled", "n_trees", "max_depth", "features_per_split", "seed"},
    "attacks": {"feature_steps", "beta", "theta", "eta", "gamma", "seed"},
}
_KNOWN["linegraphsage"] = _KNOWN["egraphsage"]


def _sage(sec, seed: int) -> SageConfig | None:
    if not _get(sec, "enabled", _bool, True):
        return None
    d = SageConfig()
    return SageConfig(
        hidden_dim=_get(sec, "hidden_dim", int, d.hidden_dim),
        n_layers=_get(sec, "n_layers", int, d.n_layers),
        learning_rate=_get(sec, "learning_rate", float, d.learning_rate),
        epochs=_get(sec, "epochs", int, d.epochs),
        seed=_get(sec, "seed", int, seed),
        class_weight=_get(sec, "class_weight", str, d.class_weight),
        neighbor_cap=_get(sec, "neighbor_cap", _opt_int, d.neighbor_cap),
    )


def parse_config(text: str, seed: int | None = None, override_grids: bool = False,
                 base_dir: str | Path = ".") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    for name in cp.sections():
        if name not in _KNOWN:
            raise ConfigError(f"unknown section [{name}]")
        unknown = set(cp[name]) - _KNOWN[name]
        if unknown:
            raise ConfigError(f"[{name}] unknown key(s): {', '.join(sorted(unknown))}")
    if "experiment" not in cp:
        raise ConfigError("missing [experiment] section")
    ex = cp["experiment"]
    sec = lambda n: cp[n] if n in cp else None  # noqa: E731
    master = seed if seed is not None else _get(ex, "seed", int, 0)
    # an explicit --seed replaces every seed in the file
    sseed = (lambda s: master) if seed is not None else (lambda s: _get(s, "seed", int, master))

    ds = sec("dataset")
    source = _get(ds, "source", str, "synth")
    categorical = _get(ds, "categorical", lambda t: tuple(_list(t)), None)
    try:
        if source == "synth":
            synth = SynthConfig(
                n_hosts=_get(ds, "n_hosts", int, 50),
                n_compromised=_get(ds, "n_compromised", int, 2),
                benign_flows=_get(ds, "benign_flows", int, 2000),
                malicious_flows=_get(ds, "malicious_flows", int, 200),
                attack_pattern=_get(ds, "attack_pattern", str, "scan"),
                seed=sseed(ds),
            )
            dataset = DatasetSource("synth", categorical=categorical, synth=synth)
        elif source == "csv":
            path = _get(ds, "path", str, None)
            if not path:
                raise ConfigError("[dataset] source = csv needs a path")
            p = Path(path)
            if not p.is_absolute():
                p = Path(base_dir) / p
            if not p.is_file():
                raise ConfigError(f"[dataset] path {p} does not exist")
            dataset = DatasetSource("csv", str(p), _get(ds, "schema", str, "generic"), categorical)
        else:
            raise ConfigError(f"[dataset] source must be synth or csv, not {source!r}")

        sp = sec("split")
        at = sec("attacks")
        grid = AttackGrid(
            feature_steps=_get(at, "feature_steps", lambda t: tuple(float(v) for v in _list(t)),
                               atk.FEATURE_STEPS),
            beta=_get(at, "beta", _ints, atk.C2X_GRID),
            theta=_get(at, "theta", _ints, atk.C2X_GRID),
            eta=_get(at, "eta", _ints, atk.ETA_GRID),
            gamma=_get(at, "gamma", _ints, atk.GAMMA_GRID),
            seed=sseed(at),
            override=override_grids,
        )
        fr = sec("forest")
        forest = None
        if _get(fr, "enabled", _bool, True):
            forest = ForestConfig(
                n_trees=_get(fr, "n_trees", int, 100),
                max_depth=_get(fr, "max_depth", _opt_int, None),
                features_per_split=_get(fr, "features_per_split", str, "sqrt"),
                seed=sseed(fr),
            )
        cfg = ExperimentConfig(
            name=_get(ex, "name", str, "experiment"),
            seed=master,
            attack_name=_get(ex, "attack_name", str, "scan"),
            dataset=dataset,
            train_frac=_get(sp, "train_frac", float, 0.8),
            benign_ratio=_get(sp, "benign_ratio", int, 10),
            split_seed=sseed(sp),
            egraphsage=_sage(sec("egraphsage"), sseed(sec("egraphsage"))),
            linegraphsage=_sage(sec("linegraphsage"), sseed(sec("linegraphsage"))),
            forest=forest,
            grid=grid,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.egraphsage is None and cfg.linegraphsage is None and cfg.forest is None:
        raise ConfigError("every model is disabled")
    return cfg


def load_config(path, seed: int | None = None, override_grids: bool = False) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    return parse_config(path.read_text(encoding="utf-8"), seed, override_grids, path.parent)


def config_from_dict(d: dict, override_grids: bool | None = None) -> ExperimentConfig:
    """Inverse of ``ExperimentConfig.to_dict`` (used to reload stage metadata)."""
    ds = d["dataset"]
    cat = ds.get("categorical")
    if ds["source"] == "csv":
        dataset = DatasetSource("csv", ds["path"], ds["schema"], None if cat is None else tuple(cat))
    else:
        dataset = DatasetSource("synth", categorical=None if cat is None else tuple(cat),
                                synth=SynthConfig(**ds["synth"]))
    g = dict(d["attacks"])
    if override_grids is not None:
        g["override"] = override_grids
    opt = lambda cls, v: None if v is None else cls(**v)  # noqa: E731
    return ExperimentConfig(
        name=d["name"], seed=d["seed"], attack_name=d["attack_name"], dataset=dataset,
        train_frac=d["split"]["train_frac"], benign_ratio=d["split"]["benign_ratio"],
        split_seed=d["split"]["seed"],
        egraphsage=opt(SageConfig, d["egraphsage"]), linegraphsage=opt(SageConfig, d["linegraphsage"]),
        forest=opt(ForestConfig, d["forest"]),
        grid=AttackGrid(**{k: tuple(v) if isinstance(v, list) else v for k, v in g.items()}),
    )
