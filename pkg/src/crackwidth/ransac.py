"""RANSAC line fitting on boundary points.

Lines are stored as (angle, offset) about a reference ``origin`` so vertical
edges need no special casing: a point ``p`` is on the line when
``n . (p - origin) == offset`` with unit normal ``n = (-sin a, cos a)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .boundary import PointSet
from .pca import eig2_sym, reduce_angle, slope_of

__all__ = [
    "LineModel",
    "RansacParams",
    "NoConsensusError",
    "ransac_fit",
    "tls_line",
    "point_line_distance",
    "line_through",
]


class NoConsensusError(ValueError):
    """No hypothesis gathered enough inliers to call the points line-like."""


@dataclass(frozen=True)
class RansacParams:
    iterations: int = 500
    inlier_tol: float = 1.5
    min_inlier_frac: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.inlier_tol > 0:
            raise ValueError("inlier_tol must be > 0")
        if not 0 < self.min_inlier_frac <= 1:
            raise ValueError("min_inlier_frac must be in (0, 1]")


@dataclass(frozen=True)
class LineModel:
    angle: float
    offset: float
    origin: Tuple[float, float] = (0.0, 0.0)
    inlier_count: int = 0

    @property
    def direction(self) -> Tuple[float, float]:
        return (math.cos(self.angle), math.sin(self.angle))

    @property
    def normal(self) -> Tuple[float, float]:
        return (-math.sin(self.angle), math.cos(self.angle))

    @property
    def vertical(self) -> bool:
        return slope_of(self.direction)[1]

    @property
    def slope(self) -> Optional[float]:
        return slope_of(self.direction)[0]

    @property
    def intercept(self) -> Optional[float]:
        """``b`` in ``y - y0 = t (x - x0) + b``, relative to ``origin``."""
        if self.vertical:
            return None
        return self.offset / math.cos(self.angle)

    def foot(self) -> Tuple[float, float]:
        """Point of the line closest to ``origin``."""
        nx, ny = self.normal
        return (self.origin[0] + self.offset * nx, self.origin[1] + self.offset * ny)


def line_through(point, angle: float, origin=(0.0, 0.0)) -> LineModel:
    angle = reduce_angle(angle)
    nx, ny = -math.sin(angle), math.cos(angle)
    off = nx * (point[0] - origin[0]) + ny * (point[1] - origin[1])
    return LineModel(angle, off, (float(origin[0]), float(origin[1])))


def point_line_distance(p, line: LineModel) -> float:
    nx, ny = line.normal
    return abs(nx * (p[0] - line.origin[0]) + ny * (p[1] - line.origin[1]) - line.offset)


def tls_line(points: np.ndarray, origin=(0.0, 0.0)) -> LineModel:
    """Total-least-squares line through an ``(N, 2)`` array (N >= 2)."""
    pts = np.asarray(points, dtype=float)
    mean = pts.mean(axis=0)
    d = pts - mean
    lam_max, _, vec = eig2_sym(float(d[:, 0] @ d[:, 0]), float(d[:, 0] @ d[:, 1]), float(d[:, 1] @ d[:, 1]))
    if lam_max == 0.0:
        raise ValueError("degenerate point set: all points coincide")
    line = line_through(mean, math.atan2(vec[1], vec[0]), origin)
    return LineModel(line.angle, line.offset, line.origin, int(len(pts)))


def _distances(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``(K, N)`` distances from every point to each line through ``a[k]`` and ``b[k]``."""
    d = b - a
    norm = np.hypot(d[:, 0], d[:, 1])
    ok = norm > 0
    normals = np.stack([-d[:, 1], d[:, 0]], axis=1) / np.where(ok, norm, 1.0)[:, None]
    offsets = np.einsum("kj,kj->k", normals, a)
    dist = np.abs(normals @ pts.T - offsets[:, None])
    dist[~ok] = np.inf
    return dist


def ransac_fit(ps: PointSet, params: RansacParams = RansacParams(), origin=(0.0, 0.0)) -> LineModel:
    """Best two-point hypothesis by inlier count, refit by TLS on its inliers.

    Raises
    ------
    NoConsensusError
        If the best hypothesis explains fewer than ``min_inlier_frac`` of the points.
    """
    pts = ps.points if isinstance(ps, PointSet) else np.asarray(ps, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n < 2:
        raise ValueError(f"need at least 2 points, got {n}")
    rng = np.random.default_rng(params.seed)
    i = rng.integers(0, n, size=params.iterations)
    j = rng.integers(0, n - 1, size=params.iterations)
    j = j + (j >= i)

    best_count, best_mask = -1, None
    # chunked so memory stays bounded for large boundaries
    chunk = max(1, 200_000 // n)
    for start in range(0, params.iterations, chunk):
        sl = slice(start, start + chunk)
        inl = _distances(pts, pts[i[sl]], pts[j[sl]]) <= params.inlier_tol
        counts = inl.sum(axis=1)
        k = int(np.argmax(counts))
        if counts[k] > best_count:
            best_count, best_mask = int(counts[k]), inl[k]

    if best_count < 2 or best_count < params.min_inlier_frac * n:
        raise NoConsensusError(
            f"best line explains {max(best_count, 0)}/{n} points, below {params.min_inlier_frac:.2f}"
        )
    fit = tls_line(pts[best_mask], origin)
    return LineModel(fit.angle, fit.offset, fit.origin, best_count)
