"""Deterministic binary checkpoint container.

Layout (all little-endian):

    magic   b"HOIKIT\\x00"           8 bytes
    hlen    uint64                   header length in bytes
    header  UTF-8 JSON               {"format": ..., "version": 1,
                                      "config": {...},
                                      "arrays": {name: {dtype, shape, offset, nbytes}}}
    payload raw C-order array bytes, concatenated in sorted-name order

The byte stream is a pure function of (config, arrays), so identical inputs
produce hash-identical files.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import MissingArtifactError

MAGIC = b"HOIKIT\x00"
FORMAT_VERSION = 1


def write_checkpoint(path: str | Path, kind: str, config: dict, arrays: dict[str, np.ndarray]) -> None:
    names = sorted(arrays)
    meta = {}
    offset = 0
    blobs = []
    for name in names:
        arr = np.ascontiguousarray(arrays[name])
        blob = arr.tobytes()
        meta[name] = {
            "dtype": arr.dtype.str,
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(blob),
        }
        offset += len(blob)
        blobs.append(blob)
    header = json.dumps(
        {"format": kind, "version": FORMAT_VERSION, "config": config, "arrays": meta},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for blob in blobs:
            f.write(blob)


def read_checkpoint(path: str | Path, expect_kind: str | None = None) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(f"checkpoint not found: {path}")
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise MissingArtifactError(f"{path} is not a hoikit checkpoint (bad magic)")
        (hlen,) = struct.unpack("<Q", f.read(8))
        header = json.loads(f.read(hlen).decode("utf-8"))
        payload = f.read()
    if header.get("version") != FORMAT_VERSION:
        raise MissingArtifactError(f"unsupported checkpoint version {header.get('version')}")
    if expect_kind is not None and header.get("format") != expect_kind:
        raise MissingArtifactError(
            f"expected a {expect_kind!r} checkpoint, found {header.get('format')!r}"
        )
    arrays = {}
    for name, info in header["arrays"].items():
        start, n = info["offset"], info["nbytes"]
        arr = np.frombuffer(payload[start : start + n], dtype=np.dtype(info["dtype"]))
        arrays[name] = arr.reshape(info["shape"]).copy()
    return header["config"], arrays


def state_dict_arrays(module, prefix: str) -> dict[str, np.ndarray]:
    """Flatten a torch module's state dict into named numpy arrays."""
    return {
        f"{prefix}.{name}": tensor.detach().cpu().numpy()
        for name, tensor in module.state_dict().items()
    }


def load_state_dict_arrays(module, arrays: dict[str, np.ndarray], prefix: str) -> None:
    import torch

    state = {}
    skip = len(prefix) + 1
    for name, arr in arrays.items():
        if name.startswith(prefix + "."):
            state[name[skip:]] = torch.from_numpy(np.asarray(arr))
    module.load_state_dict(state)
