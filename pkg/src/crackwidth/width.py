"""
Width counting perpendicular to the propagation axis, the chord-sum cost of
a candidate axis, the skeleton (area / skeleton length) baseline and the
MAE/MSE error metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.ndimage import map_coordinates
from skimage.morphology import skeletonize

from .maskio import Patch, _rotate_array, rotate_point
from .ransac import LineModel

__all__ = [
    "WidthSample",
    "ChordCost",
    "WidthError",
    "measure_width_at",
    "mpa_cost",
    "chord_length",
    "sbm_width",
    "mae",
    "mse",
]


class WidthError(ValueError):
    """The check point could not be located on the crack after rotation."""


@dataclass(frozen=True)
class WidthSample:
    width_px: int
    column: int
    run_start: int
    run_end: int
    row: int  # rotated-frame row of the check point


@dataclass(frozen=True)
class ChordCost:
    total: float
    used: int
    skipped: int


def _as_array(patch) -> np.ndarray:
    return patch.data if isinstance(patch, Patch) else np.asarray(patch, dtype=float)


def _locate(crack: np.ndarray, fx: float, fy: float) -> Tuple[int, int]:
    """Crack pixel at (fx, fy), or the nearest one within one pixel of it."""
    h, w = crack.shape
    px, py = int(math.floor(fx + 0.5)), int(math.floor(fy + 0.5))
    if 0 <= px < w and 0 <= py < h and crack[py, px]:
        return px, py
    cands = []
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            x, y = px + dx, py + dy
            if (dx or dy) and 0 <= x < w and 0 <= y < h and crack[y, x]:
                cands.append((math.hypot(x - fx, y - fy), dy, dx, x, y))
    if not cands:
        raise WidthError(f"rotated check point ({fx:.2f}, {fy:.2f}) fell on background")
    _, _, _, x, y = min(cands)
    return x, y


def measure_width_at(patch: Patch, cp_in_patch, mpa_angle: float) -> WidthSample:
    """Rotate the axis to horizontal and count the vertical crack run through the check point."""
    data = _as_array(patch)
    x, y = (cp_in_patch.x, cp_in_patch.y) if hasattr(cp_in_patch, "x") else cp_in_patch
    if not data[int(y), int(x)] >= 0.5:
        raise WidthError(f"check point ({x}, {y}) is not a crack pixel of the patch")
    fx, fy = rotate_point((x, y), -mpa_angle, data.shape)
    # only the columns next to the rotated point are ever read
    px = int(math.floor(fx + 0.5))
    cols = slice(max(px - 1, 0), max(min(px + 2, data.shape[1]), 0))
    rotated = np.zeros(data.shape, dtype=bool)
    if cols.stop > cols.start:
        band = data[:, cols] if mpa_angle == 0.0 else _rotate_array(data, -mpa_angle, cols)
        rotated[:, cols] = band >= 0.5
    col, row = _locate(rotated, fx, fy)
    column = rotated[:, col]
    start = row
    while start > 0 and column[start - 1]:
        start -= 1
    end = row
    while end < len(column) - 1 and column[end + 1]:
        end += 1
    return WidthSample(end - start + 1, col, start, end, row)


def _sample(field: np.ndarray, xs, ys) -> np.ndarray:
    """Bilinear intensity at (xs, ys); NaN outside the frame."""
    h, w = field.shape
    xs, ys = np.atleast_1d(np.asarray(xs, dtype=float)), np.atleast_1d(np.asarray(ys, dtype=float))
    out = map_coordinates(field, [ys, xs], order=1, mode="nearest", prefilter=False)
    frame = (xs >= -0.5) & (xs <= w - 0.5) & (ys >= -0.5) & (ys <= h - 0.5)
    return np.where(frame, out, np.nan)


def _march(field, x, y, ux, uy, step=0.05):
    """Distance from (x, y) along (ux, uy) to the first drop of the
    interpolated intensity below 0.5.

    ``None`` if the ray leaves the frame first.
    """
    ts = np.arange(1, int(2.0 * math.hypot(*field.shape) / step) + 1) * step
    vals = _sample(field, x + ts * ux, y + ts * uy)
    below = ~(vals >= 0.5)  # NaN (outside) counts as a stop too
    k = int(np.argmax(below))
    if not below[k] or np.isnan(vals[k]):
        return None
    lo, hi = (ts[k - 1] if k else 0.0), ts[k]
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if _sample(field, x + mid * ux, y + mid * uy)[0] >= 0.5:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def chord_length(patch, point, angle: float):
    """Boundary-to-boundary length through ``point`` along direction ``angle``.

    The boundary is the 0.5 level of the bilinearly interpolated patch.
    ``None`` when either side runs out of the frame before leaving the crack.
    """
    field = np.asarray(_as_array(patch), dtype=float)
    ux, uy = math.cos(angle), math.sin(angle)
    a = _march(field, point[0], point[1], ux, uy)
    b = _march(field, point[0], point[1], -ux, -uy)
    if a is None or b is None:
        return None
    return a + b


def mpa_cost(patch, line: LineModel, n_samples: int = 25) -> ChordCost:
    """Sum over samples on the line of the distances to the two boundary crossings
    met when marching perpendicular to it.

    Boundaries are the 0.5 level of the bilinearly interpolated patch, so
    anti-aliased renderings give sub-pixel chords.  Samples are spread
    uniformly over the part of the line lying inside the crack.  Samples
    whose perpendicular leaves the patch before crossing a boundary are
    skipped and counted in ``ChordCost.skipped``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    field = np.asarray(_as_array(patch), dtype=float)
    fx, fy = line.foot()
    dx, dy = line.direction
    reach = math.hypot(*field.shape) + abs(line.offset) + math.hypot(*line.origin)
    ts = np.arange(-reach, reach, 0.25)
    inside = ts[_sample(field, fx + ts * dx, fy + ts * dy) >= 0.5]
    if inside.size == 0:
        raise ValueError("line does not pass through the crack")
    idx = np.unique(np.round(np.linspace(0, len(inside) - 1, n_samples)).astype(int))
    perp = line.angle + math.pi / 2
    total, used, skipped = 0.0, 0, 0
    for k in idx:
        t = inside[k]
        chord = chord_length(field, (fx + t * dx, fy + t * dy), perp)
        if chord is None:
            skipped += 1
        else:
            total += chord
            used += 1
    if len(idx) < n_samples:
        # fewer distinct in-crack positions than requested samples
        skipped += n_samples - len(idx)
    return ChordCost(total, used, skipped)


def sbm_width(patch) -> float:
    """Mean width as crack area divided by skeleton length."""
    crack = _as_array(patch) >= 0.5
    if not crack.any():
        raise ValueError("no crack pixels")
    skel = skeletonize(crack)
    n = int(skel.sum())
    if n == 0:
        raise ValueError("empty skeleton")
    return float(crack.sum()) / n


def _pair(widths: Sequence[float], gts: Sequence[float]):
    w = np.asarray(widths, dtype=float)
    g = np.asarray(gts, dtype=float)
    if w.shape != g.shape:
        raise ValueError(f"length mismatch: {w.size} widths vs {g.size} ground truths")
    if w.size == 0:
        raise ValueError("empty input")
    return w, g


def mae(widths: Sequence[float], gts: Sequence[float]) -> float:
    w, g = _pair(widths, gts)
    return float(np.mean(np.abs(w - g)))


def mse(widths: Sequence[float], gts: Sequence[float]) -> float:
    w, g = _pair(widths, gts)
    return float(np.mean((w - g) ** 2))
