import os

import numpy as np
import pytest

from rfield.io import atomic_write, fmt_float, sample_from_bytes, sample_to_bytes, sample_to_csv
from rfield.kernels import SpectralKernel
from rfield.sampler import Lattice, sample_field


def test_float_format_roundtrips():
    for x in (0.1, 1 / 3, 2.0**-1074, 1e308, -0.0):
        assert float(fmt_float(x)) == x


@pytest.mark.parametrize("d,n", [(1, 16), (2, 8), (3, 4)])
def test_binary_roundtrip(d, n):
    s = sample_field(SpectralKernel.vacuum(dimension=d), Lattice(d, n, 0.3), 2**63 + 5, 9)
    blob = sample_to_bytes(s)
    assert len(blob) == 40 + 8 * n**d
    back = sample_from_bytes(blob)
    assert back.values.tobytes() == s.values.tobytes()
    assert (back.seed, back.member, back.lattice) == (s.seed, s.member, s.lattice)


def test_binary_rejects_garbage():
    with pytest.raises(ValueError):
        sample_from_bytes(b"RFL")
    with pytest.raises(ValueError):
        sample_from_bytes(b"XXXX" + bytes(36))
    s = sample_field(SpectralKernel.vacuum(), Lattice(1, 8, 0.3), 1)
    with pytest.raises(ValueError):
        sample_from_bytes(sample_to_bytes(s)[:-8])


def test_csv_layout():
    s = sample_field(SpectralKernel.vacuum(dimension=2), Lattice(2, 4, 0.5), 1)
    lines = sample_to_csv(s).splitlines()
    assert lines[0] == "i,j,x,y,value" and len(lines) == 17
    i, j, x, y, v = lines[6].split(",")
    assert (int(i), int(j)) == (1, 1) and float(x) == 0.5
    assert float(v) == s.values[1, 1]


def test_atomic_write(tmp_path):
    p = tmp_path / "out.txt"
    atomic_write(str(p), "hello")
    atomic_write(str(p), b"bye")
    assert p.read_bytes() == b"bye"
    assert os.listdir(tmp_path) == ["out.txt"]
