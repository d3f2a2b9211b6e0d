"""Checkpoint format: a JSON manifest plus a sibling binary blob.

The manifest lists parameter names and shapes in order; the blob holds the
raw little-endian float64 values concatenated in that order. Optimizer
scalars and arbitrary JSON metadata ride along in the manifest.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .tensor import Tensor

MANIFEST_NAME = "manifest.json"
BLOB_NAME = "params.bin"
FORMAT_VERSION = 1


def save_checkpoint(directory, tensors: dict, scalars: dict | None = None,
                    extra: dict | None = None):
    """Write tensors (name -> Tensor or ndarray) under `directory`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    blobs = []
    for name, t in tensors.items():
        arr = np.asarray(t.data if isinstance(t, Tensor) else t, dtype=np.float64)
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(arr.astype("<f8").tobytes(order="C"))
        offset += arr.size
    manifest = {
        "format_version": FORMAT_VERSION,
        "dtype": "<f8",
        "total_values": offset,
        "tensors": entries,
        "scalars": scalars or {},
        "extra": extra or {},
    }
    with open(directory / MANIFEST_NAME, "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
    with open(directory / BLOB_NAME, "wb") as f:
        for b in blobs:
            f.write(b)
    return directory


def load_checkpoint(directory):
    """Return (tensors: name -> ndarray, scalars, extra)."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise FileNotFoundError(f"no checkpoint manifest at {manifest_path}")
    with open(manifest_path) as f:
        manifest = json.load(f)
    raw = np.fromfile(directory / BLOB_NAME, dtype="<f8")
    if raw.size != manifest["total_values"]:
        raise ValueError(f"checkpoint blob has {raw.size} values, manifest "
                         f"says {manifest['total_values']}")
    tensors = {}
    for entry in manifest["tensors"]:
        n = int(np.prod(entry["shape"])) if entry["shape"] else 1
        chunk = raw[entry["offset"]:entry["offset"] + n]
        tensors[entry["name"]] = chunk.reshape(entry["shape"]).astype(np.float64)
    return tensors, manifest["scalars"], manifest["extra"]
