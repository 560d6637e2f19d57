"""Netflow records: loading, preprocessing, splitting and synthesis."""
from .io import (EmptyDatasetError, RowError, Schema, SchemaError, load_csv, load_schema,
                 read_attack_csv, read_table, write_csv, write_table)
from .preprocess import NormalizationParams, fit_normalization, preprocess, raw_matrix
from .records import (ATTACKABLE, Endpoint, FlowTable, Label, NetflowRecord, RecordError,
                      malicious_source_ips)
from .split import DatasetSplit, SplitError, make_split
from .synth import SynthConfig, synth_generate, synth_table

__all__ = [
    "ATTACKABLE", "DatasetSplit", "EmptyDatasetError", "Endpoint", "FlowTable", "Label",
    "NetflowRecord", "NormalizationParams", "RecordError", "RowError", "Schema", "SchemaError",
    "SplitError", "SynthConfig", "fit_normalization", "load_csv", "load_schema",
    "make_split", "malicious_source_ips", "preprocess", "raw_matrix", "read_attack_csv",
    "read_table", "synth_generate", "synth_table", "write_csv", "write_table",
]
