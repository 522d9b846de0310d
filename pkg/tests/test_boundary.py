import numpy as np
import pytest
from hypothesis import given, strategies as st

from crackwidth.boundary import PointSet, boundary_mask, center_points, extract_boundary
from crackwidth.maskio import Patch


def _as_set(ps):
    return {(int(x), int(y)) for x, y in ps.points}


def test_strip_boundary():
    a = np.zeros((10, 10))
    a[4:7, :] = 1.0
    got = _as_set(extract_boundary(Patch(a)))
    expected = {(x, y) for x in range(10) for y in (4, 6)} | {(0, 5), (9, 5)}
    assert got == expected


def test_isolated_pixel():
    a = np.zeros((9, 9))
    a[3, 5] = 1.0
    assert _as_set(extract_boundary(Patch(a))) == {(5, 3)}


def test_full_patch_gives_ring():
    got = _as_set(extract_boundary(Patch(np.ones((8, 8)))))
    ring = {(x, y) for x in range(8) for y in range(8) if x in (0, 7) or y in (0, 7)}
    assert got == ring


def test_empty_patch_raises():
    with pytest.raises(ValueError):
        extract_boundary(Patch(np.zeros((8, 8))))


@given(st.integers(8, 20), st.integers(8, 20), st.data())
def test_rectangle_perimeter(h, w, data):
    y0 = data.draw(st.integers(1, h - 2))
    y1 = data.draw(st.integers(y0 + 1, h - 1))
    x0 = data.draw(st.integers(1, w - 2))
    x1 = data.draw(st.integers(x0 + 1, w - 1))
    a = np.zeros((h, w))
    a[y0:y1, x0:x1] = 1.0
    ps = extract_boundary(Patch(a))
    rh, rw = y1 - y0, x1 - x0
    perimeter = rh * rw - max(rh - 2, 0) * max(rw - 2, 0)
    assert len(ps) == perimeter
    pts = ps.points
    assert len({tuple(p) for p in pts}) == len(pts)
    assert (pts[:, 0] >= 0).all() and (pts[:, 0] < w).all()
    assert (pts[:, 1] >= 0).all() and (pts[:, 1] < h).all()


def test_boundary_subset_of_crack(rng):
    a = rng.random((20, 20)) < 0.4
    b = boundary_mask(a)
    assert not (b & ~a).any()


@pytest.mark.parametrize(
    "pts,mean,cols",
    [
        ([(0, 0), (2, 0)], (1, 0), [[-1, 1], [0, 0]]),
        ([(1, 1), (1, 3), (3, 1), (3, 3)], (2, 2), [[-1, -1, 1, 1], [-1, 1, -1, 1]]),
    ],
)
def test_center_points(pts, mean, cols):
    cm = center_points(PointSet(np.array(pts)))
    assert cm.mean == mean
    assert np.array_equal(cm.matrix, np.array(cols, dtype=float))


def test_center_single_point():
    with pytest.raises(ValueError):
        center_points(PointSet(np.array([(1, 1)])))


@given(
    st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), min_size=2, max_size=30),
    st.integers(-1000, 1000),
    st.integers(-1000, 1000),
)
def test_translation_invariance(pts, dx, dy):
    a = np.array(pts, dtype=float)
    m1 = center_points(PointSet(a)).matrix
    m2 = center_points(PointSet(a + [dx, dy])).matrix
    assert np.allclose(m1, m2, atol=1e-9)
    assert np.all(np.abs(m1.sum(axis=1)) <= 1e-9 * len(pts))
