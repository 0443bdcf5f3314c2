"""Reader/writer for the TCLT binary tensor format.

Layout (little-endian)::

    offset 0   b"TCLT"
    offset 4   version (u8) = 1
    offset 5   dtype   (u8) = 0, signed 16-bit
    offset 6   rank    (u8)
    offset 7   reserved (u8) = 0
    offset 8   rank x u32 extents
    ...        payload, int16, row-major with the last dim fastest
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .tensor import as_tensor16

MAGIC = b"TCLT"
VERSION = 1
DTYPE_I16 = 0


class TensorFormatError(ValueError):
    pass


def header_size(rank: int) -> int:
    return 8 + 4 * rank


def encode_tensor(tensor) -> bytes:
    arr = as_tensor16(tensor)
    if arr.ndim > 255:
        raise TensorFormatError("rank exceeds 255")
    head = MAGIC + bytes([VERSION, DTYPE_I16, arr.ndim, 0])
    head += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + np.ascontiguousarray(arr).astype("<i2").tobytes()


def decode_tensor(buf: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(buf) < 8:
        raise TensorFormatError(f"{source}: truncated header ({len(buf)} bytes)")
    if buf[:4] != MAGIC:
        raise TensorFormatError(f"{source}: bad magic {buf[:4].hex(' ').upper()}")
    version, dtype, rank, reserved = buf[4], buf[5], buf[6], buf[7]
    if version != VERSION:
        raise TensorFormatError(f"{source}: unsupported version {version}")
    if dtype != DTYPE_I16:
        raise TensorFormatError(f"{source}: unsupported dtype {dtype}")
    if reserved != 0:
        raise TensorFormatError(f"{source}: reserved byte is {reserved}, expected 0")
    hsize = header_size(rank)
    if len(buf) < hsize:
        raise TensorFormatError(f"{source}: truncated extents")
    dims = struct.unpack_from(f"<{rank}I", buf, 8)
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    need = hsize + 2 * count
    if len(buf) != need:
        raise TensorFormatError(
            f"{source}: payload length {len(buf) - hsize} bytes, expected {2 * count}")
    data = np.frombuffer(buf, dtype="<i2", count=count, offset=hsize)
    return data.astype(np.int16).reshape(dims)


def store_tensor(path: str | os.PathLike, tensor) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_tensor(tensor))


def load_tensor(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_tensor(fh.read(), source=os.fspath(path))
