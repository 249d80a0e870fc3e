"""Binary map/sample formats: golden bytes, round trips, corrupt files."""

import struct

import numpy as np
import pytest

from rfmap.completion import TubeSampleSet
from rfmap.formats import read_smp, read_t3b, write_smp, write_t3b


def test_t3b_golden_bytes(tmp_path):
    t = np.arange(8, dtype=float).reshape(2, 2, 2)
    path = tmp_path / "g.t3b"
    write_t3b(path, t)
    # header, then values i-fastest, then j, then k
    expected = b"T3B\x01" + struct.pack("<III", 2, 2, 2)
    for v in (0.0, 4.0, 2.0, 6.0, 1.0, 5.0, 3.0, 7.0):
        expected += struct.pack("<d", v)
    assert path.read_bytes() == expected


def test_t3b_round_trip(tmp_path):
    t = np.random.default_rng(0).standard_normal((5, 3, 7))
    path = tmp_path / "r.t3b"
    write_t3b(path, t)
    assert np.array_equal(read_t3b(path), t)


def test_t3b_rejects_bad_magic_and_truncation(tmp_path):
    good = tmp_path / "a.t3b"
    write_t3b(good, np.zeros((2, 2, 2)))
    data = good.read_bytes()

    bad = tmp_path / "bad.t3b"
    bad.write_bytes(b"XXXX" + data[4:])
    with pytest.raises(ValueError, match="bad magic"):
        read_t3b(bad)

    short = tmp_path / "short.t3b"
    short.write_bytes(data[:10])
    with pytest.raises(ValueError, match="truncated"):
        read_t3b(short)

    chopped = tmp_path / "chopped.t3b"
    chopped.write_bytes(data[:-8])
    with pytest.raises(ValueError, match="expected"):
        read_t3b(chopped)


def test_t3b_rejects_non_third_order(tmp_path):
    with pytest.raises(ValueError, match="third-order"):
        write_t3b(tmp_path / "x.t3b", np.zeros((3, 3)))


def test_smp_golden_bytes(tmp_path):
    s = TubeSampleSet(
        n1=2, n2=3, n3=2,
        rows=np.array([1, 0]), cols=np.array([2, 1]),
        tubes=np.array([[1.5, -2.5], [0.25, 0.75]]),
    )
    path = tmp_path / "g.smp"
    write_smp(path, s)
    expected = b"SMP\x01" + struct.pack("<IIII", 2, 3, 2, 2)
    # canonical (row, col) order puts (0,1) before (1,2)
    expected += struct.pack("<II", 0, 1) + struct.pack("<dd", 0.25, 0.75)
    expected += struct.pack("<II", 1, 2) + struct.pack("<dd", 1.5, -2.5)
    assert path.read_bytes() == expected


def test_smp_round_trip_is_canonical(tmp_path):
    rng = np.random.default_rng(1)
    flat = rng.permutation(6 * 7)[:20]
    s = TubeSampleSet(
        n1=6, n2=7, n3=3,
        rows=flat // 7, cols=flat % 7,
        tubes=rng.standard_normal((20, 3)),
    )
    path = tmp_path / "r.smp"
    write_smp(path, s)
    back = read_smp(path)
    ref = s.sorted_by_position()
    assert np.array_equal(back.rows, ref.rows)
    assert np.array_equal(back.cols, ref.cols)
    assert np.array_equal(back.tubes, ref.tubes)
    assert (back.n1, back.n2, back.n3) == (6, 7, 3)


def test_smp_rejects_corruption(tmp_path):
    good = tmp_path / "a.smp"
    write_smp(good, TubeSampleSet(
        n1=2, n2=2, n3=1,
        rows=np.array([0]), cols=np.array([1]), tubes=np.array([[2.0]]),
    ))
    data = good.read_bytes()
    bad = tmp_path / "bad.smp"
    bad.write_bytes(b"NOPE" + data[4:])
    with pytest.raises(ValueError, match="bad magic"):
        read_smp(bad)
    chopped = tmp_path / "c.smp"
    chopped.write_bytes(data[:-4])
    with pytest.raises(ValueError, match="expected"):
        read_smp(chopped)
    empty = tmp_path / "e.smp"
    empty.write_bytes(data[:8])
    with pytest.raises(ValueError, match="truncated"):
        read_smp(empty)
