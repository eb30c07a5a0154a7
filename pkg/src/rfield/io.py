"""File formats: field samples as CSV or binary dumps, atomic writes.

Binary layout (little endian)::

    offset  size  field
    0       4     magic b"RFLD"
    4       4     uint32 format version (1)
    8       4     uint32 dimension d
    12      4     uint32 sites per axis N
    16      8     float64 lattice spacing a
    24      8     uint64 master seed
    32      8     uint64 ensemble member
    40      8*N^d float64 site values, row-major (C order)
"""

from __future__ import annotations

import io
import os
import struct
import tempfile

import numpy as np

from .sampler import FieldSample, Lattice

MAGIC = b"RFLD"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdQQ")


def fmt_float(x: float) -> str:
    """17 significant digits: round-trips every double."""
    return f"{x:.17g}"


def sample_to_csv(sample: FieldSample) -> str:
    lat = sample.lattice
    d = lat.dimension
    idx_names = ["i", "j", "l"][:d]
    pos_names = ["x", "y", "z"][:d]
    out = io.StringIO()
    out.write(",".join(idx_names + pos_names + ["value"]) + "\n")
    idx = np.indices(lat.shape).reshape(d, -1).T
    for site, value in zip(idx, sample.values.reshape(-1)):
        coords = [fmt_float(float(c) * lat.spacing) for c in site]
        out.write(",".join([str(int(c)) for c in site] + coords + [fmt_float(float(value))]) + "\n")
    return out.getvalue()


def sample_to_bytes(sample: FieldSample) -> bytes:
    lat = sample.lattice
    header = _HEADER.pack(MAGIC, VERSION, lat.dimension, lat.sites, lat.spacing, sample.seed, sample.member)
    return header + np.ascontiguousarray(sample.values, dtype="<f8").tobytes()


def sample_from_bytes(data: bytes) -> FieldSample:
    if len(data) < _HEADER.size:
        raise ValueError("truncated field dump")
    magic, version, d, n, a, seed, member = _HEADER.unpack_from(data)
    if magic != MAGIC or version != VERSION:
        raise ValueError("not a version-1 RFLD field dump")
    lat = Lattice(d, n, a)
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if values.size != n**d:
        raise ValueError(f"expected {n**d} values, found {values.size}")
    return FieldSample(lat, values.reshape(lat.shape).astype(float), seed, member, {})


def atomic_write(path: str, data: bytes | str):
    """Write to a temp file in the target directory, then rename over ``path``."""
    if isinstance(data, str):
        data = data.encode()
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".rfield-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
