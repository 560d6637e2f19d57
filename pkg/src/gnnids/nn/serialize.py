"""Versioned npz container shared by GNN models and forests.

Each file holds named float/int arrays plus a ``__meta__`` entry with a JSON
header carrying the format name, version, object kind and free metadata.
"""
from __future__ import annotations

import io
import json

import numpy as np

from ..fsutil import atomic_write
from .sage import SageConfig, SageLayerParams, SageModel

FORMAT = "gnnids-container"
VERSION = 1


class FormatError(ValueError):
    pass


def save_container(path, kind: str, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    header = {"format": FORMAT, "version": VERSION, "kind": kind, "meta": meta}
    blob = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    buf = io.BytesIO()
    np.savez(buf, __meta__=blob, **arrays)
    atomic_write(path, buf.getvalue())


def load_container(path, kind: str) -> tuple[dict, dict[str, np.ndarray]]:
    try:
        with np.load(path, allow_pickle=False) as z:
            arrays = {k: z[k] for k in z.files}
    except (OSError, ValueError) as exc:
        raise FormatError(f"{path}: not a readable container ({exc})") from exc
    if "__meta__" not in arrays:
        raise FormatError(f"{path}: missing header")
    header = json.loads(arrays.pop("__meta__").tobytes().decode())
    if header.get("format") != FORMAT:
        raise FormatError(f"{path}: unknown format {header.get('format')!r}")
    if header.get("version") != VERSION:
        raise FormatError(f"{path}: version {header.get('version')} unsupported (want {VERSION})")
    if header.get("kind") != kind:
        raise FormatError(f"{path}: holds a {header.get('kind')!r}, expected {kind!r}")
    return header["meta"], arrays


def save_model(model: SageModel, path) -> None:
    arrays = {}
    for k, layer in enumerate(model.layers):
        arrays[f"l{k}_w_self"] = layer.w_self
        arrays[f"l{k}_w_neigh"] = layer.w_neigh
        arrays[f"l{k}_bias"] = layer.bias
    arrays["head_w"] = model.head_w
    arrays["head_b"] = model.head_b
    meta = {"mode": model.mode, "input_dim": model.input_dim, "n_layers": len(model.layers),
            "config": model.config.to_dict()}
    save_container(path, "sage-model", meta, arrays)


def load_model(path) -> SageModel:
    meta, a = load_container(path, "sage-model")
    layers = [SageLayerParams(a[f"l{k}_w_self"], a[f"l{k}_w_neigh"], a[f"l{k}_bias"])
              for k in range(meta["n_layers"])]
    return SageModel(meta["mode"], meta["input_dim"], layers, a["head_w"], a["head_b"],
                     SageConfig(**meta["config"]))
