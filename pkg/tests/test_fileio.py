import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from salloss import fileio
from salloss.core import SaliencyError
from salloss.fileio import FormatError
from salloss.synthetic import blob_dataset


def test_p2_scaling(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P2\n# comment\n2 2\n255\n0 255\n0 255\n")
    np.testing.assert_array_equal(fileio.load_map(p), [[0, 1], [0, 1]])


def test_p5_16bit(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5 1 1 65535\n" + struct.pack(">H", 32768))
    assert fileio.load_map(p)[0, 0] == 32768 / 65535


def test_p5_8bit_with_comment():
    m = fileio.parse_pgm(b"P5\n#c\n3 1\n#d\n4\n\x00\x02\x04")
    np.testing.assert_array_equal(m, [[0.0, 0.5, 1.0]])


@pytest.mark.parametrize("data", [
    b"P5\n2 2\n255\n\x00\x01\x02",
    b"P2\n2 2\n255\n0 1 2",
    b"P2\n2 2\n3\n0 1 2 4",
    b"P2\n2\n",
    b"P5\n2 2 0\n\x00\x00\x00\x00",
    b"P2\n2 x\n255\n",
])
def test_bad_graymaps(data):
    with pytest.raises(FormatError):
        fileio.parse_pgm(data)


def test_salmap_round_trip_is_bit_exact(tmp_path, rng):
    m = rng.random((5, 7)) * 3.0
    m[0, 0] = 5e-324
    p = tmp_path / "m.salmap"
    fileio.save_map(p, m)
    back = fileio.load_map(p)
    assert back.tobytes() == m.tobytes()
    raw = p.read_bytes()
    assert raw[:8] == b"SALMAP1\0" and struct.unpack_from("<II", raw, 8) == (7, 5)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(0.0, 1e6, allow_subnormal=True)))
def test_salmap_round_trip_property(m):
    back = fileio.parse_salmap(fileio.SALMAP_MAGIC + struct.pack("<II", m.shape[1], m.shape[0])
                               + m.astype("<f8").tobytes())
    assert back.tobytes() == m.astype(np.float64).tobytes()


def test_salmap_errors(tmp_path, rng):
    good = fileio.SALMAP_MAGIC + struct.pack("<II", 2, 1) + np.array([0.5, 1.0]).tobytes()
    fileio.parse_salmap(good)
    for bad in (good[:-1], good + b"\0", good[:12],
                fileio.SALMAP_MAGIC + struct.pack("<II", 2, 1) + np.array([0.5, np.inf]).tobytes(),
                fileio.SALMAP_MAGIC + struct.pack("<II", 0, 1)):
        with pytest.raises(FormatError):
            fileio.parse_salmap(bad)
    p = tmp_path / "x.bin"
    p.write_bytes(b"GIF89a")
    with pytest.raises(FormatError):
        fileio.load_map(p)


def test_pgm_save_quantises(tmp_path):
    p = tmp_path / "q.pgm"
    fileio.save_map(p, [[0.0, 0.5, 1.0]])
    np.testing.assert_allclose(fileio.load_map(p), [[0.0, 32768 / 65535, 1.0]])


def test_fixation_csv(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("0,0\n1,1\n")
    assert fileio.load_fixations(p, (2, 2)).points == ((0, 0), (1, 1))
    p.write_text("x,y\n1,0\n1,0\n\n# note\n0,1\n")
    assert sorted(fileio.load_fixations(p, (2, 2)).points) == [(0, 1), (1, 0)]
    p.write_text("")
    assert len(fileio.load_fixations(p, (2, 2))) == 0


@pytest.mark.parametrize("text", ["2,0\n", "0,-1\n", "1\n", "0,0\na,b\n"])
def test_bad_fixation_csv(tmp_path, text):
    p = tmp_path / "f.csv"
    p.write_text(text)
    with pytest.raises(SaliencyError):
        fileio.load_fixations(p, (2, 2))


def test_fixation_graymap(tmp_path):
    p = tmp_path / "f.pgm"
    p.write_bytes(b"P2 2 2 255 0 255 0 0")
    fix = fileio.load_fixations(p)
    assert fix.points == ((1, 0),) and fix.frame == (2, 2)
    with pytest.raises(FormatError):
        fileio.load_fixations(p, (3, 2))


def test_fixation_round_trip(tmp_path):
    fix = blob_dataset(1)[0].fix
    fileio.save_fixations(tmp_path / "f.csv", fix)
    assert fileio.load_fixations(tmp_path / "f.csv", fix.frame) == fix


def test_dataset_layout(tmp_path):
    samples = blob_dataset(3, seed=2)
    ids = fileio.write_dataset(tmp_path, samples)
    entries = fileio.scan_dataset(tmp_path)
    assert [e.id for e in entries] == ids == sorted(ids)
    gt, fix, stim = entries[1].load()
    np.testing.assert_array_equal(gt, samples[1].gt)
    np.testing.assert_array_equal(stim, samples[1].image)
    assert fix == samples[1].fix


def test_dataset_errors(tmp_path):
    with pytest.raises(FormatError):
        fileio.scan_dataset(tmp_path)
    (tmp_path / "maps").mkdir()
    with pytest.raises(FormatError):
        fileio.scan_dataset(tmp_path)
    fileio.save_map(tmp_path / "maps" / "a.salmap", np.ones((2, 2)))
    with pytest.raises(FormatError, match="no fixation"):
        fileio.scan_dataset(tmp_path)


def test_write_curve(tmp_path):
    fileio.write_curve(tmp_path / "c.csv", [1.5, 0.25])
    assert (tmp_path / "c.csv").read_text() == "iteration,loss\n0,1.5\n1,0.25\n"
