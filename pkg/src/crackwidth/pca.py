"""Principal-axis orientation of boundary points via a closed-form 2 x 2 eigensolve."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .boundary import CenteredMatrix

__all__ = [
    "OrientationEstimate",
    "VERTICAL_EPS",
    "eig2_sym",
    "pca_slope",
    "angle_from_slope",
    "reduce_angle",
    "slope_of",
]

VERTICAL_EPS = 1e-9


def reduce_angle(theta: float) -> float:
    """Map an axis angle into [0, pi)."""
    r = math.fmod(theta, math.pi)
    if r < 0.0:
        r += math.pi
    if r >= math.pi:
        r = 0.0
    return r


def slope_of(axis) -> Tuple[Optional[float], bool]:
    """(slope, vertical_flag) for a direction vector."""
    ax, ay = float(axis[0]), float(axis[1])
    if abs(ax) < VERTICAL_EPS:
        return None, True
    return ay / ax, False


@dataclass(frozen=True)
class OrientationEstimate:
    angle: float
    slope: Optional[float]
    vertical: bool
    eigen_ratio: float
    principal_axis: Tuple[float, float]
    eigenvalues: Tuple[float, float]  # (max, min)


def eig2_sym(a: float, b: float, c: float):
    """Eigen-decomposition of ``[[a, b], [b, c]]``.

    Returns ``(lam_max, lam_min, unit_vector_for_lam_max)``.
    """
    half_tr = 0.5 * (a + c)
    half_diff = 0.5 * (a - c)
    disc = math.hypot(half_diff, b)
    lam_max = half_tr + disc
    lam_min = half_tr - disc
    # two algebraically equivalent eigenvector forms; keep the better conditioned
    v1 = (lam_max - c, b)
    v2 = (b, lam_max - a)
    n1 = math.hypot(*v1)
    n2 = math.hypot(*v2)
    if max(n1, n2) == 0.0:
        # isotropic (b == 0, a == c): every direction is principal
        vec = (1.0, 0.0)
    elif n1 >= n2:
        vec = (v1[0] / n1, v1[1] / n1)
    else:
        vec = (v2[0] / n2, v2[1] / n2)
    return lam_max, lam_min, vec


def pca_slope(cm: CenteredMatrix) -> OrientationEstimate:
    """Leading eigenvector of ``M M^T`` for the centred point matrix ``M``."""
    if cm.n < 2:
        raise ValueError("need at least 2 points")
    x, y = cm.matrix[0], cm.matrix[1]
    sxx = float(np.dot(x, x))
    syy = float(np.dot(y, y))
    sxy = float(np.dot(x, y))
    if sxx + syy == 0.0:
        raise ValueError("zero covariance: all points coincide")
    lam_max, lam_min, vec = eig2_sym(sxx, sxy, syy)
    lam_min = max(lam_min, 0.0)
    # fix the sign so the axis points into the half-plane angle in [0, pi)
    if vec[1] < 0.0 or (vec[1] == 0.0 and vec[0] < 0.0):
        vec = (-vec[0], -vec[1])
    slope, vertical = slope_of(vec)
    ratio = math.inf if lam_min == 0.0 else lam_max / lam_min
    return OrientationEstimate(
        angle=reduce_angle(math.atan2(vec[1], vec[0])),
        slope=slope,
        vertical=vertical,
        eigen_ratio=ratio,
        principal_axis=(vec[0] + 0.0, vec[1] + 0.0),
        eigenvalues=(lam_max, lam_min),
    )


def angle_from_slope(t: Optional[float], vertical: bool = False) -> float:
    """``arctan(t)``; a vertical flag (or ``t is None``) gives pi/2."""
    if vertical or t is None:
        return math.pi / 2
    return math.atan(t)
