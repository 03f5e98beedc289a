"""Binary tensor checkpoints.

Layout (all integers little-endian)::

    magic  b"HEMOCKPT"      8 bytes
    version                 uint32
    count                   uint32
    per tensor:
        name length         uint32
        name                utf-8 bytes
        dtype code          uint8   (0 = float32, 1 = float64, 2 = int64)
        rank                uint32
        dims                rank x uint64
        data                raw little-endian, row-major
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"HEMOCKPT"
VERSION = 1
_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1, np.dtype("<i8"): 2}
_DTYPES = {v: k for k, v in _CODES.items()}


class CheckpointError(ValueError):
    pass


def atomic_write_bytes(path: str | os.PathLike, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_tensors(tensors: Mapping[str, np.ndarray]) -> bytes:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        dt = arr.dtype.newbyteorder("<")
        if dt not in _CODES:
            raise CheckpointError(f"unsupported dtype {arr.dtype} for {name!r}")
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<BI", _CODES[dt], arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(np.ascontiguousarray(arr, dtype=dt).tobytes())
    return b"".join(chunks)


def decode_tensors(payload: bytes) -> dict[str, np.ndarray]:
    if payload[:8] != MAGIC:
        raise CheckpointError("bad checkpoint magic")
    version, count = struct.unpack_from("<II", payload, 8)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    pos = 16
    out: dict[str, np.ndarray] = {}
    try:
        for _ in range(count):
            (nlen,) = struct.unpack_from("<I", payload, pos)
            pos += 4
            name = payload[pos:pos + nlen].decode("utf-8")
            pos += nlen
            code, rank = struct.unpack_from("<BI", payload, pos)
            pos += 5
            dims = struct.unpack_from(f"<{rank}Q", payload, pos)
            pos += 8 * rank
            dt = _DTYPES[code]
            n = int(np.prod(dims, dtype=np.int64)) * dt.itemsize
            if pos + n > len(payload):
                raise CheckpointError(f"truncated data for tensor {name!r}")
            out[name] = np.frombuffer(payload, dtype=dt, count=n // dt.itemsize, offset=pos).reshape(dims).copy()
            pos += n
    except (struct.error, KeyError) as exc:
        raise CheckpointError(f"corrupt checkpoint: {exc}") from exc
    return out


def save_checkpoint(path: str | os.PathLike, tensors: Mapping[str, np.ndarray]) -> Path:
    atomic_write_bytes(path, encode_tensors(tensors))
    return Path(path)


def load_checkpoint(path: str | os.PathLike) -> dict[str, np.ndarray]:
    return decode_tensors(Path(path).read_bytes())
