"""Binary checkpoint format.

Layout: magic bytes ``DSPN``, format version (u32 little-endian), header
length (u32 little-endian), UTF-8 JSON header, then every parameter as
little-endian float64 in header order. The header records the model config,
vocabulary sizes, and the ordered (name, shape) parameter list.
"""

import json
import struct

import numpy as np

from .params import ParamSet

MAGIC = b"DSPN"
VERSION = 1


class CheckpointError(ValueError):
    """Unreadable or incompatible checkpoint file."""


def save_checkpoint(path, params, config_obj, extra=None):
    header = {
        "config": config_obj,
        "params": [[name, list(p.value.shape)] for name, p in params.items()],
    }
    if extra:
        header.update(extra)
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for _, p in params.items():
            fh.write(p.value.astype("<f8").tobytes())


def load_checkpoint(path):
    """Returns (header dict, ParamSet) or raises CheckpointError."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a model checkpoint (bad magic)")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != VERSION:
        raise CheckpointError(
            f"{path}: checkpoint version {version}, expected {VERSION}")
    (header_len,) = struct.unpack("<I", blob[8:12])
    try:
        header = json.loads(blob[12:12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from exc
    params = ParamSet()
    offset = 12 + header_len
    for name, shape in header["params"]:
        n = int(np.prod(shape)) if shape else 1
        end = offset + 8 * n
        if end > len(blob):
            raise CheckpointError(f"{path}: truncated payload at {name!r}")
        arr = np.frombuffer(blob[offset:end], dtype="<f8").reshape(shape)
        params.add(name, arr.astype(np.float64))
        offset = end
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} trailing bytes")
    return header, params
