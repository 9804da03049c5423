"""Minimal deterministic container for a JSON header plus named numpy arrays.

``np.savez`` stamps zip entries with the current time, which breaks
byte-for-byte reproducibility of pipeline outputs; this format does not.

Layout: 8-byte magic, ``<u4`` version, ``<u8`` header length, UTF-8 JSON
header (metadata and array specs), then each array's raw little-endian bytes
in header order.
"""
import json
import struct

import numpy as np

from .errors import ValidationError

_PREFIX = struct.Struct("<8sIQ")


def write_arrays(path, magic: bytes, version: int, meta: dict, arrays: dict) -> None:
    specs = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        dtype = arr.dtype.newbyteorder("<") if arr.dtype.byteorder == ">" else arr.dtype
        arr = arr.astype(dtype, copy=False)
        specs.append({"name": name, "dtype": dtype.str, "shape": list(arr.shape)})
        blobs.append(arr.tobytes())
    header = json.dumps({"meta": meta, "arrays": specs}, sort_keys=True,
                        ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(magic, version, len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def read_arrays(path, magic: bytes, version: int):
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < _PREFIX.size:
        raise ValidationError(f"{path}: truncated file")
    got_magic, got_version, hlen = _PREFIX.unpack_from(buf)
    if got_magic != magic:
        raise ValidationError(f"{path}: wrong file type (magic {got_magic!r})")
    if got_version != version:
        raise ValidationError(f"{path}: unsupported version {got_version}")
    off = _PREFIX.size
    header = json.loads(buf[off:off + hlen].decode("utf-8"))
    off += hlen
    arrays = {}
    for spec in header["arrays"]:
        dtype = np.dtype(spec["dtype"])
        count = int(np.prod(spec["shape"], dtype=np.int64))
        arr = np.frombuffer(buf, dtype=dtype, count=count, offset=off)
        off += arr.nbytes
        arrays[spec["name"]] = arr.reshape(spec["shape"]).copy()
    return header["meta"], arrays
