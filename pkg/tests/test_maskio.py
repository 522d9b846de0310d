import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image
from scipy.ndimage import gaussian_filter

from crackwidth.maskio import (
    BinaryMask,
    CheckPoint,
    NotCrackPixelError,
    Patch,
    extract_patch,
    load_mask,
    patch_center,
    rotate_patch,
    rotate_point,
    save_mask,
)

from conftest import strip_array


def _write(path, arr, mode="L"):
    Image.fromarray(np.asarray(arr, dtype=np.uint8), mode=mode).save(path)


@pytest.mark.parametrize(
    "value,expected",
    [(255, 9), (0, 0)],
)
def test_load_uniform_images(tmp_path, value, expected):
    p = tmp_path / "m.png"
    _write(p, np.full((3, 3), value))
    assert int(load_mask(p).data.sum()) == expected


def test_load_threshold_boundary(tmp_path):
    p = tmp_path / "m.png"
    _write(p, [[127, 128]])
    assert load_mask(p).data.tolist() == [[False, True]]


def test_load_pgm(tmp_path):
    p = tmp_path / "m.pgm"
    _write(p, [[0, 200], [255, 10]])
    assert load_mask(p).data.tolist() == [[False, True], [True, False]]


def test_load_rejects_rgb(tmp_path):
    p = tmp_path / "rgb.png"
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8), mode="RGB").save(p)
    with pytest.raises(ValueError, match="single-channel"):
        load_mask(p)


def test_load_rejects_garbage(tmp_path):
    p = tmp_path / "junk.png"
    p.write_bytes(b"not an image")
    with pytest.raises(ValueError, match="unreadable"):
        load_mask(p)


def test_mask_is_read_only():
    m = BinaryMask(np.ones((2, 2)))
    with pytest.raises(ValueError):
        m.data[0, 0] = False


@pytest.mark.parametrize("shape", [(0, 3), (3, 0)])
def test_mask_rejects_empty(shape):
    with pytest.raises(ValueError):
        BinaryMask(np.zeros(shape))


def test_extract_patch_origin(strip_mask):
    p = extract_patch(strip_mask, CheckPoint(50, 50), 64)
    assert p.origin == (18, 18)
    assert p.data.shape == (64, 64)
    assert p.data[p.center[1], p.center[0]] == 1.0


def test_extract_patch_corner_is_padded():
    m = np.zeros((20, 20), dtype=bool)
    m[0, 0] = True
    p = extract_patch(BinaryMask(m), CheckPoint(0, 0), 64)
    assert p.origin == (-32, -32)
    assert p.data[:32, :].sum() == 0
    assert p.data[:, :32].sum() == 0
    assert p.data[32, 32] == 1.0


def test_extract_patch_background_point(strip_mask):
    with pytest.raises(NotCrackPixelError, match="not a crack pixel"):
        extract_patch(strip_mask, CheckPoint(0, 0))


def test_extract_patch_outside(strip_mask):
    with pytest.raises(NotCrackPixelError):
        extract_patch(strip_mask, CheckPoint(200, 50))


def test_extract_patch_min_size(strip_mask):
    with pytest.raises(ValueError):
        extract_patch(strip_mask, CheckPoint(50, 50), 7)


@pytest.mark.parametrize("bad", [np.zeros((7, 9)), np.full((8, 8), 1.5), np.full((8, 8), np.nan)])
def test_patch_validation(bad):
    with pytest.raises(ValueError):
        Patch(bad)


@given(
    st.integers(1, 40), st.integers(1, 40), st.integers(0, 10_000), st.sampled_from([16, 33, 64])
)
def test_patch_center_is_crack(h, w, seed, size):
    rng = np.random.default_rng(seed)
    m = rng.random((h, w)) < 0.5
    y, x = int(rng.integers(h)), int(rng.integers(w))
    m[y, x] = True
    p = extract_patch(BinaryMask(m), CheckPoint(x, y), size)
    cx, cy = p.center
    assert p.data[cy, cx] == 1.0


def test_rotate_identity(rng):
    p = Patch(rng.random((16, 16)))
    assert np.array_equal(rotate_patch(p, 0.0).data, p.data)


def test_rotate_quarter_turn():
    p = Patch(strip_array(rows=(30, 35)))
    r = rotate_patch(p, math.pi / 2).binary()
    # row y maps to column 64 - y about centre (32, 32)
    cols = np.nonzero(r[32])[0]
    assert cols.tolist() == [30, 31, 32, 33, 34]
    assert r[5:59, 30:35].all()


def test_rotate_rejects_nan(strip_patch):
    with pytest.raises(ValueError):
        rotate_patch(strip_patch, float("nan"))


def test_rotate_point_matches_content():
    a = np.zeros((32, 32))
    a[16, 24] = 1.0
    r = rotate_patch(Patch(a), math.pi / 2).data
    fx, fy = rotate_point((24, 16), math.pi / 2, a.shape)
    assert (round(fx), round(fy)) == (16, 24)
    assert r[24, 16] == pytest.approx(1.0)


def test_round_trip_error():
    # spatially correlated binary patches; pixel-level white noise is not
    # representable after bilinear resampling and is not tested here
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        a = (gaussian_filter(rng.random((64, 64)), 3) > 0.5).astype(float)
        th = rng.uniform(-math.pi, math.pi)
        back = rotate_patch(rotate_patch(Patch(a), th), -th).data
        inner = slice(16, 48)
        worst = max(worst, float(np.abs(back[inner, inner] - a[inner, inner]).mean()))
    assert worst <= 0.1


@given(st.floats(-math.pi, math.pi), st.integers(2, 12))
def test_rotation_preserves_mass(angle, half):
    a = np.zeros((64, 64))
    a[32 - half:32 + half, 20:44] = 1.0
    r = rotate_patch(Patch(a), angle).data
    assert abs(r.sum() - a.sum()) <= 0.05 * a.sum()


@given(arrays(np.bool_, st.tuples(st.integers(1, 12), st.integers(1, 12))))
def test_save_load_round_trip(tmp_path_factory, data):
    p = tmp_path_factory.mktemp("rt") / "m.png"
    m = BinaryMask(data)
    save_mask(m, p)
    assert load_mask(p) == m


def test_save_load_pgm(tmp_path):
    m = BinaryMask(np.eye(5, dtype=bool))
    save_mask(m, tmp_path / "m.pgm")
    assert (tmp_path / "m.pgm").read_bytes()[:2] == b"P5"
    assert load_mask(tmp_path / "m.pgm") == m


def test_patch_center_convention():
    assert patch_center((64, 64)) == (32, 32)
    assert patch_center((9, 11)) == (5, 4)
