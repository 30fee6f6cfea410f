"""Field container invariants and GRID1 file round trips."""

import math

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from selfscore.grid import (GridField, WavelengthBand, crop_taper,
                            next_pow2_dims, read_grid, taper_zero_pad,
                            write_grid)


def _field(values, kind="real", spacing=0.02, eval_mask=None):
    return GridField(np.asarray(values, dtype=np.float64), spacing, kind, eval_mask)


# ---------------------------------------------------------------------------
# GridField invariants

def test_values_are_immutable_float64():
    f = _field([[0.0, 1.0], [2.0, 3.0]])
    assert f.values.dtype == np.float64
    assert not f.values.flags.writeable
    with pytest.raises(ValueError):
        f.values[0, 0] = 9.0


def test_kind_contracts_enforced():
    with pytest.raises(ValueError):
        _field([[0.5]], kind="mask")
    with pytest.raises(ValueError):
        _field([[1.5]], kind="prob")
    with pytest.raises(ValueError):
        _field([[0.0]], kind="banana")
    _field([[0.0, 1.0]], kind="mask")
    _field([[0.0, 1.0]], kind="prob")
    _field([[-3.0, 7.0]], kind="real")


def test_non_finite_and_empty_rejected():
    with pytest.raises(ValueError):
        _field([[np.nan]])
    with pytest.raises(ValueError):
        _field([[np.inf]])
    with pytest.raises(ValueError):
        _field(np.zeros((0, 4)))
    with pytest.raises(ValueError):
        _field(np.zeros(4))  # 1-D


def test_spacing_must_be_positive():
    with pytest.raises(ValueError):
        _field([[0.0]], spacing=0.0)
    with pytest.raises(ValueError):
        _field([[0.0]], spacing=-1.0)


def test_eval_mask_shape_checked():
    with pytest.raises(ValueError):
        _field(np.zeros((3, 3)), eval_mask=np.ones((2, 3), dtype=bool))
    f = _field(np.zeros((3, 3)), eval_mask=np.ones((3, 3), dtype=bool))
    assert f.eval_mask.dtype == bool
    assert not f.eval_mask.flags.writeable


def test_with_values_keeps_metadata():
    f = _field(np.zeros((2, 2)), kind="prob", spacing=0.5)
    g = f.with_values(np.full((2, 2), 0.25))
    assert g.kind == "prob" and g.spacing_deg == 0.5
    h = f.with_values(np.full((2, 2), -1.0), kind="real")
    assert h.kind == "real"


# ---------------------------------------------------------------------------
# WavelengthBand

def test_band_validation():
    WavelengthBand(0.0, 0.1)
    WavelengthBand(0.1, math.inf)
    with pytest.raises(ValueError):
        WavelengthBand(0.2, 0.1)
    with pytest.raises(ValueError):
        WavelengthBand(0.1, 0.1)
    with pytest.raises(ValueError):
        WavelengthBand(-0.1, 0.2)
    assert WavelengthBand(0.0, math.inf).is_all_pass
    assert not WavelengthBand(0.0, 0.8).is_all_pass


# ---------------------------------------------------------------------------
# padding helpers

def test_next_pow2_dims():
    assert next_pow2_dims((205, 205)) == (256, 256)
    assert next_pow2_dims((256, 100)) == (256, 128)
    assert next_pow2_dims((1, 3)) == (1, 4)


def test_taper_pad_centers_with_odd_remainder_bottom_right():
    f = _field(np.arange(6.0).reshape(2, 3))
    padded = taper_zero_pad(f, (5, 6))
    # rows: 2 -> 5: one above, two below; cols: 3 -> 6: one left, two right
    assert padded.shape == (5, 6)
    assert_array_equal(padded.values[1:3, 1:4], f.values)
    assert padded.values.sum() == f.values.sum()
    back = crop_taper(padded, (2, 3))
    assert_array_equal(back.values, f.values)


def test_taper_pad_round_trip_random_shapes():
    rng = np.random.default_rng(42)
    for _ in range(20):
        rows = int(rng.integers(1, 30))
        cols = int(rng.integers(1, 30))
        f = _field(rng.normal(size=(rows, cols)))
        target = (rows + int(rng.integers(0, 10)), cols + int(rng.integers(0, 10)))
        back = crop_taper(taper_zero_pad(f, target), (rows, cols))
        assert_array_equal(back.values, f.values)


def test_taper_pad_rejects_shrinking():
    f = _field(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        taper_zero_pad(f, (3, 8))


# ---------------------------------------------------------------------------
# GRID1 I/O

def test_round_trip_quantises_to_float32(tmp_path):
    rng = np.random.default_rng(0)
    values = rng.normal(size=(7, 5)) * 100.0
    f = _field(values)
    path = tmp_path / "f.grid"
    write_grid(path, f)
    g = read_grid(path)
    assert g.kind == "real" and g.spacing_deg == f.spacing_deg
    assert_array_equal(g.values, values.astype("<f4").astype(np.float64))
    # a second write/read cycle is bit-stable
    path2 = tmp_path / "g.grid"
    write_grid(path2, g)
    assert path.read_bytes() == path2.read_bytes()


def test_round_trip_mask_and_eval_mask(tmp_path):
    rng = np.random.default_rng(1)
    values = (rng.uniform(size=(6, 9)) < 0.4).astype(np.float64)
    emask = rng.uniform(size=(6, 9)) < 0.8
    f = _field(values, kind="mask", eval_mask=emask)
    path = tmp_path / "m.grid"
    write_grid(path, f)
    g = read_grid(path)
    assert g.kind == "mask"
    assert_array_equal(g.values, values)
    assert_array_equal(g.eval_mask, emask)


def test_header_layout(tmp_path):
    f = _field(np.zeros((3, 4)), kind="prob", spacing=0.02)
    path = tmp_path / "h.grid"
    write_grid(path, f)
    blob = path.read_bytes()
    assert blob.startswith(b"GRID1\n3 4 0.02 prob\n")
    assert len(blob) == len(b"GRID1\n3 4 0.02 prob\n") + 3 * 4 * 4


def test_read_rejects_malformed(tmp_path):
    path = tmp_path / "bad.grid"
    path.write_bytes(b"NOPE1\n2 2 0.02 real\n" + b"\x00" * 16)
    with pytest.raises(ValueError):
        read_grid(path)
    path.write_bytes(b"GRID1\n2 2 0.02 weird\n" + b"\x00" * 16)
    with pytest.raises(ValueError):
        read_grid(path)
    path.write_bytes(b"GRID1\n2 2 0.02 real\n" + b"\x00" * 15)  # short payload
    with pytest.raises(ValueError):
        read_grid(path)
    path.write_bytes(b"GRID1\n2 2 0.02 real masked\n" + b"\x00" * 16 + b"\x00\x01\x02\x00")
    with pytest.raises(ValueError):
        read_grid(path)  # mask byte 2
    path.write_bytes(b"GRID1\n2 2 0.02")
    with pytest.raises(ValueError):
        read_grid(path)  # truncated header


def test_write_is_atomic_no_temp_left_behind(tmp_path):
    f = _field(np.ones((2, 2)))
    path = tmp_path / "a.grid"
    write_grid(path, f)
    write_grid(path, f.with_values(np.zeros((2, 2))))
    assert read_grid(path).values.sum() == 0.0
    leftovers = [p for p in tmp_path.iterdir() if p.suffix == ".tmp"]
    assert leftovers == []
