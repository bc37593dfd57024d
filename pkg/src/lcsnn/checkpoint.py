"""Binary container for named float arrays.

Layout (all integers little-endian unsigned 32-bit):

    magic "BLCN" | format version | entry count
    per entry: name length | name (UTF-8) | ndim | dims... | data

Array data is little-endian IEEE float64, C order.  Integral quantities
(shapes, flags, counts) are stored as exactly representable floats, which
keeps the format single-typed and the save/load round trip bit-identical.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"BLCN"
VERSION = 1


class CheckpointError(Exception):
    """Base for unreadable checkpoint files."""


class CheckpointMagicError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointTruncatedError(CheckpointError):
    pass


def save_arrays(path: str | Path, arrays: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(arrays)))
        for name, arr in arrays.items():
            arr = np.ascontiguousarray(arr, dtype="<f8")
            encoded = name.encode("utf-8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes())


def _read_exact(f, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise CheckpointTruncatedError(f"unexpected end of file while reading {what}")
    return buf


def load_arrays(path: str | Path) -> dict[str, np.ndarray]:
    arrays: dict[str, np.ndarray] = {}
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "magic")
        if magic != MAGIC:
            raise CheckpointMagicError(f"bad magic {magic!r} in {path}")
        version, count = struct.unpack("<II", _read_exact(f, 8, "header"))
        if version > VERSION:
            raise CheckpointVersionError(
                f"format version {version} is newer than supported version {VERSION}"
            )
        for i in range(count):
            (name_len,) = struct.unpack("<I", _read_exact(f, 4, f"entry {i} name length"))
            name = _read_exact(f, name_len, f"entry {i} name").decode("utf-8")
            (ndim,) = struct.unpack("<I", _read_exact(f, 4, f"{name} ndim"))
            shape = struct.unpack(f"<{ndim}I", _read_exact(f, 4 * ndim, f"{name} dims"))
            n_bytes = 8 * int(np.prod(shape, dtype=np.int64))
            data = _read_exact(f, n_bytes, f"{name} data")
            arrays[name] = np.frombuffer(data, dtype="<f8").reshape(shape).copy()
    return arrays
