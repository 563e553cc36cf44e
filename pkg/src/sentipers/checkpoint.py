"""Self-describing model checkpoints.

A checkpoint is an uncompressed ``.npz`` archive. Entry ``__meta__`` holds
a JSON document (format tag, version, model kind and name, config,
vocabulary and its hash); every other entry is a named parameter array.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import DataError

FORMAT = "sentipers-checkpoint"
VERSION = 1


def save_checkpoint(path, meta: dict, arrays: dict) -> None:
    meta = dict(meta)
    meta["format"] = FORMAT
    meta["version"] = VERSION
    meta["params"] = {name: list(np.shape(a)) for name, a in arrays.items()}
    payload = {f"param/{name}": np.asarray(a) for name, a in arrays.items()}
    payload["__meta__"] = np.array(json.dumps(meta, ensure_ascii=False, sort_keys=True))
    with open(os.fspath(path), "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path) -> tuple[dict, dict]:
    try:
        with np.load(os.fspath(path), allow_pickle=False) as data:
            if "__meta__" not in data.files:
                raise DataError(f"{path}: not a checkpoint (no __meta__ entry)")
            meta = json.loads(str(data["__meta__"]))
            arrays = {k[len("param/"):]: data[k] for k in data.files if k.startswith("param/")}
    except (OSError, ValueError) as exc:
        raise DataError(f"{path}: unreadable checkpoint: {exc}") from None
    if meta.get("format") != FORMAT:
        raise DataError(f"{path}: unknown checkpoint format {meta.get('format')!r}")
    if "version" not in meta:
        raise DataError(f"{path}: checkpoint has no version field")
    if meta["version"] > VERSION:
        raise DataError(f"{path}: checkpoint version {meta['version']} is newer than supported {VERSION}")
    for name, shape in meta.get("params", {}).items():
        if name not in arrays or list(arrays[name].shape) != shape:
            raise DataError(f"{path}: parameter {name!r} missing or has the wrong shape")
    return meta, arrays
