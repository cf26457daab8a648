"""Versioned binary checkpoint format ("LAPN").

Layout: magic, u32 version, u32 d, u32 k, f64 mass scale, u32 dim count,
u32 head hidden dims, u64 parameter count, then the flat little-endian f64
parameter vector. Round trips are bitwise.
"""
from __future__ import annotations

import struct

import numpy as np

from ..errors import BadMagic, TruncatedFile, VersionMismatch
from .params import LapNetParams

_MAGIC = b"LAPN"
_VERSION = 1


def save_model(params: LapNetParams, path, k=32, c_m=1.0):
    dims = params.head_hidden
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", _VERSION, params.d, int(k)))
        fh.write(struct.pack("<d", float(c_m)))
        fh.write(struct.pack("<I", len(dims)))
        fh.write(struct.pack(f"<{len(dims)}I", *dims))
        fh.write(struct.pack("<Q", params.size))
        fh.write(np.ascontiguousarray(params.flat, dtype="<f8").tobytes())


def load_model(path):
    """Returns (params, k, c_m)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 or blob[:4] != _MAGIC:
        raise BadMagic(f"{path}: not a LAPN checkpoint")
    off = 4

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(blob):
            raise TruncatedFile(f"{path}: truncated at byte {off}")
        vals = struct.unpack_from(fmt, blob, off)
        off += size
        return vals

    version, d, k = take("<III")
    if version != _VERSION:
        raise VersionMismatch(f"{path}: format version {version}, expected {_VERSION}")
    (c_m,) = take("<d")
    (n_dims,) = take("<I")
    dims = take(f"<{n_dims}I")
    (n_params,) = take("<Q")
    need = 8 * n_params
    if off + need > len(blob):
        raise TruncatedFile(f"{path}: expected {need} parameter bytes, found {len(blob) - off}")
    flat = np.frombuffer(blob[off : off + need], dtype="<f8").copy()
    params = LapNetParams(d, dims, flat=flat)
    return params, int(k), float(c_m)
