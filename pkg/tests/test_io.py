import math
import os

import numpy as np
import pytest

from magdirac.io import atomic_write, csv_text, manifest_text, read_csv, read_manifest, read_spinor, write_csv, write_spinor
from magdirac.lattice import Grid, random_spinor


def test_csv_roundtrip_is_exact(tmp_path):
    rows = [{"a": 0.1 + 0.2, "b": 3, "c": True}, {"a": math.inf, "b": -1, "c": False}]
    write_csv(tmp_path / "x.csv", ["a", "b", "c"], rows)
    back = read_csv(tmp_path / "x.csv")
    assert float(back[0]["a"]) == 0.1 + 0.2 and back[1]["a"] == "inf" and back[0]["c"] == "true"
    assert csv_text(["a"], [{"a": 1.0}]) == "a\n1.0\n"


def test_spinor_roundtrip(tmp_path):
    g = Grid(4, 3.0, (0.5, 0, -1))
    u = random_spinor(g, np.random.default_rng(0))
    write_spinor(tmp_path / "u.bin", u, g)
    v, g2 = read_spinor(tmp_path / "u.bin")
    assert g2 == g and np.array_equal(u, v)
    (tmp_path / "bad.bin").write_bytes(b"nope")
    with pytest.raises(ValueError):
        read_spinor(tmp_path / "bad.bin")
    with pytest.raises(ValueError):
        write_spinor(tmp_path / "w.bin", u[:, :2], g)


def test_manifest_roundtrip(tmp_path):
    text = manifest_text({"a": 1.5, "files": ["x.csv", "y.csv"], "flag": True})
    atomic_write(tmp_path / "m.txt", text)
    m = read_manifest(tmp_path / "m.txt")
    assert m == {"a": "1.5", "files": "x.csv,y.csv", "flag": "true"}


def test_atomic_write_leaves_nothing_on_failure(tmp_path):
    with pytest.raises(TypeError):
        atomic_write(tmp_path / "z.txt", 12345)
    assert os.listdir(tmp_path) == []
