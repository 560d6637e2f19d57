"""CSV ingestion driven by declarative schema files.

A schema is a small INI file: ``[columns]`` maps each CSV header to a role,
``[labels]`` says how label cells map to benign/malicious and ``[missing]``
lists cell tokens read as zero for numeric extra features. Header names may
use ``*`` wildcards (``x_* = feature``).
"""
from __future__ import annotations

import configparser
import csv
import fnmatch
import math
import zlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .records import FlowTable, Label, NetflowRecord, RecordError, check_feature_width

ROLES = {
    "src_ip", "src_port", "dst_ip", "dst_port", "duration", "in_bytes", "out_bytes",
    "tot_packets", "tot_bytes", "label", "attack", "feature", "categorical", "ignore",
}
SUMMED = ("in_bytes", "out_bytes", "tot_packets", "tot_bytes")
REQUIRED = ("src_ip", "src_port", "dst_ip", "dst_port", "duration", "tot_packets", "label")
BUILTIN_SCHEMAS = ("generic", "ctu13", "toniot")

PROVENANCE_COLUMN = "provenance"


class SchemaError(ValueError):
    """CSV header and schema disagree, or the schema itself is malformed."""


class RowError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyDatasetError(ValueError):
    pass


@dataclass
class Schema:
    name: str
    columns: dict[str, str]
    benign: frozenset[str] = frozenset()
    malicious: frozenset[str] = frozenset()
    malicious_contains: tuple[str, ...] = ()
    benign_contains: tuple[str, ...] = ()
    default_attack: str | None = None
    missing: frozenset[str] = field(default_factory=frozenset)

    def role_of(self, header: str) -> str | None:
        if header in self.columns:
            return self.columns[header]
        for pattern, role in self.columns.items():
            if "*" in pattern and fnmatch.fnmatchcase(header, pattern):
                return role
        return None

    def parse_label(self, cell: str) -> Label:
        value = cell.strip()
        if value in self.malicious:
            return Label.MALICIOUS
        if value in self.benign:
            return Label.BENIGN
        if any(tok in value for tok in self.malicious_contains):
            return Label.MALICIOUS
        if any(tok in value for tok in self.benign_contains):
            return Label.BENIGN
        raise ValueError(f"unmapped label {value!r}")


def _split_list(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def parse_schema(text: str, name: str = "custom") -> Schema:
    cp = configparser.ConfigParser(interpolation=None, allow_no_value=True)
    cp.optionxform = str
    cp.read_string(text)
    if not cp.has_section("columns"):
        raise SchemaError(f"schema {name}: missing [columns] section")
    columns = {}
    for header, role in cp.items("columns"):
        role = (role or "").strip()
        if role not in ROLES:
            raise SchemaError(f"schema {name}: column {header!r} has unknown role {role!r}")
        columns[header] = role
    labels = dict(cp.items("labels")) if cp.has_section("labels") else {}
    tokens = frozenset()
    if cp.has_section("missing"):
        # an empty token list means empty cells
        raw = cp.get("missing", "tokens", fallback="") or ""
        tokens = frozenset(t.strip() for t in raw.split(","))
    return Schema(
        name=name,
        columns=columns,
        benign=frozenset(_split_list(labels.get("benign") or "")),
        malicious=frozenset(_split_list(labels.get("malicious") or "")),
        malicious_contains=_split_list(labels.get("malicious_contains") or ""),
        benign_contains=_split_list(labels.get("benign_contains") or ""),
        default_attack=(labels.get("default_attack") or None),
        missing=tokens,
    )


def load_schema(schema: str | Path | Schema) -> Schema:
    if isinstance(schema, Schema):
        return schema
    if str(schema) in BUILTIN_SCHEMAS:
        text = resources.files("gnnids.data").joinpath(f"schemas/{schema}.schema").read_text()
        return parse_schema(text, str(schema))
    path = Path(schema)
    if not path.exists():
        raise SchemaError(f"unknown schema {schema!r}")
    return parse_schema(path.read_text(), path.stem)


def _check_header(header: list[str], schema: Schema) -> list[str]:
    roles = []
    for h in header:
        role = schema.role_of(h)
        if role is None:
            raise SchemaError(f"unexpected column {h!r} for schema {schema.name}")
        roles.append(role)
    present = set(header)
    for col in schema.columns:
        if "*" not in col and col not in present:
            raise SchemaError(f"missing column {col!r} for schema {schema.name}")
    for role in REQUIRED:
        if role not in roles:
            raise SchemaError(f"schema {schema.name} maps no column to {role!r}")
    if "in_bytes" not in roles and "out_bytes" not in roles and "tot_bytes" not in roles:
        raise SchemaError(f"schema {schema.name} has no byte counters")
    return roles


def _number(cell: str) -> float | int:
    text = cell.strip()
    try:
        return int(text)
    except ValueError:
        pass
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value


def _port(cell: str) -> int:
    text = cell.strip()
    if not text:
        return 0
    return int(text, 0) if text.lower().startswith("0x") else int(float(text))


def _category(cell: str) -> float:
    # numeric categories keep their value, strings get a stable 32-bit code
    text = cell.strip()
    try:
        value = float(text)
    except ValueError:
        value = math.nan
    if math.isfinite(value):
        return value
    return float(zlib.crc32(text.encode("utf-8")))


def read_table(path: str | Path, schema: str | Path | Schema = "generic") -> FlowTable:
    """Load a netflow CSV into a :class:`FlowTable`."""
    schema = load_schema(schema)
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path}: empty file (no header row)") from None
        header = [h.strip() for h in header]
        if header and header[-1] == PROVENANCE_COLUMN:
            raise SchemaError(
                f"unexpected column {PROVENANCE_COLUMN!r}; use read_attack_csv for attack outputs"
            )
        roles = _check_header(header, schema)
        extra_names = tuple(h for h, r in zip(header, roles) if r in ("feature", "categorical"))
        categorical = frozenset(h for h, r in zip(header, roles) if r == "categorical")
        records = [
            _parse_row(row, header, roles, schema, line)
            for line, row in enumerate(reader, start=2)
            if row
        ]
    return FlowTable(records, extra_names, categorical)


def _parse_row(row, header, roles, schema: Schema, line: int) -> NetflowRecord:
    if len(row) != len(header):
        raise RowError(line, f"expected {len(header)} cells, got {len(row)}")
    vals: dict = {}
    sums = {k: 0 for k in SUMMED}
    seen = set()
    extras = []
    label = None
    attack = schema.default_attack
    for h, role, cell in zip(header, roles, row):
        try:
            if role in ("src_ip", "dst_ip"):
                vals[role] = cell.strip()
            elif role in ("src_port", "dst_port"):
                vals[role] = _port(cell)
            elif role == "duration":
                vals[role] = float(_number(cell))
                if not math.isfinite(vals[role]):
                    raise ValueError("non-finite duration")
            elif role in SUMMED:
                sums[role] += _number(cell)
                seen.add(role)
            elif role == "feature":
                extras.append(0.0 if cell.strip() in schema.missing else float(_number(cell)))
            elif role == "categorical":
                extras.append(_category(cell))
            elif role == "label":
                label = schema.parse_label(cell)
            elif role == "attack":
                text = cell.strip()
                attack = text if text else None
        except ValueError as exc:
            raise RowError(line, f"column {h!r}: {exc}") from None
    if "tot_bytes" in seen:
        if "in_bytes" not in seen:
            sums["in_bytes"] = sums["tot_bytes"] - sums["out_bytes"]
        elif "out_bytes" not in seen:
            sums["out_bytes"] = sums["tot_bytes"] - sums["in_bytes"]
    rec = NetflowRecord(
        src_ip=vals["src_ip"],
        src_port=vals["src_port"],
        dst_ip=vals["dst_ip"],
        dst_port=vals["dst_port"],
        duration=vals["duration"],
        in_bytes=sums["in_bytes"],
        out_bytes=sums["out_bytes"],
        tot_packets=sums["tot_packets"],
        extra_features=tuple(extras),
        label=label,
        attack_name=attack,
    )
    try:
        rec.validate()
    except RecordError as exc:
        raise RowError(line, str(exc)) from None
    return rec


def load_csv(path: str | Path, schema: str | Path | Schema = "generic") -> list[NetflowRecord]:
    return read_table(path, schema).records


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def generic_header(extra_names, provenance: bool = False) -> list[str]:
    head = ["src_ip", "src_port", "dst_ip", "dst_port", "duration", "in_bytes",
            "out_bytes", "tot_packets", *extra_names, "label", "attack_name"]
    if provenance:
        head.append(PROVENANCE_COLUMN)
    return head


def _row(r: NetflowRecord) -> list[str]:
    return [r.src_ip, str(r.src_port), r.dst_ip, str(r.dst_port), _fmt(r.duration),
            _fmt(r.in_bytes), _fmt(r.out_bytes), _fmt(r.tot_packets),
            *(_fmt(x) for x in r.extra_features), str(Label(r.label)), r.attack_name or ""]


def write_csv(records, path: str | Path, extra_names=None, provenance=None) -> None:
    """Write records in the generic schema; floats use ``repr`` so reading
    them back is exact. ``provenance`` adds one trailing column."""
    records = list(records)
    if extra_names is None:
        width = check_feature_width(records) - 4 if records else 0
        extra_names = tuple(f"x_{i}" for i in range(width))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(generic_header(extra_names, provenance is not None))
        for i, r in enumerate(records):
            row = _row(r)
            if provenance is not None:
                row.append(provenance[i])
            w.writerow(row)
    tmp.replace(path)


def write_table(table: FlowTable, path: str | Path) -> None:
    write_csv(table.records, path, table.extra_names)


def read_attack_csv(path: str | Path) -> tuple[FlowTable, list[str]]:
    """Read a generic CSV that carries a trailing provenance column."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyDatasetError(f"{path}: empty file (no header row)")
    header = rows[0]
    if header[-1] != PROVENANCE_COLUMN:
        raise SchemaError(f"{path}: missing column {PROVENANCE_COLUMN!r}")
    schema = load_schema("generic")
    roles = _check_header(header[:-1], schema)
    extra_names = tuple(h for h, r in zip(header[:-1], roles) if r in ("feature", "categorical"))
    categorical = frozenset(h for h, r in zip(header[:-1], roles) if r == "categorical")
    records, prov = [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        records.append(_parse_row(row[:-1], header[:-1], roles, schema, line))
        prov.append(row[-1])
    return FlowTable(records, extra_names, categorical), prov
