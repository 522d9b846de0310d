"""Crack boundary pixels and the mean-centred 2 x N point matrix."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .maskio import Patch

__all__ = ["PointSet", "CenteredMatrix", "boundary_mask", "extract_boundary", "center_points"]


@dataclass(frozen=True, eq=False)
class PointSet:
    """Unordered set of (x, y) pixel coordinates, stored as an ``(N, 2)`` array."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def xs(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def ys(self) -> np.ndarray:
        return self.points[:, 1]


@dataclass(frozen=True, eq=False)
class CenteredMatrix:
    matrix: np.ndarray  # 2 x N
    mean: Tuple[float, float]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]


def boundary_mask(crack: np.ndarray) -> np.ndarray:
    """Crack pixels with at least one 4-neighbour in the background.

    Pixels on the array border count as having a background neighbour.
    """
    crack = np.asarray(crack, dtype=bool)
    padded = np.pad(crack, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return crack & ~interior


def extract_boundary(patch: Patch) -> PointSet:
    crack = patch.binary()
    if not crack.any():
        raise ValueError("patch has no crack pixels")
    ys, xs = np.nonzero(boundary_mask(crack))
    return PointSet(np.column_stack([xs, ys]))


def center_points(ps: PointSet) -> CenteredMatrix:
    if len(ps) < 2:
        raise ValueError(f"need at least 2 points to centre, got {len(ps)}")
    mean = ps.points.mean(axis=0)
    m = (ps.points - mean).T.copy()
    return CenteredMatrix(m, (float(mean[0]), float(mean[1])))
