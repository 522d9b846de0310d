"""
Rejection chain: PCA on the boundary points gives a fast axis estimate, a
RANSAC edge line checks it, and patches where the two disagree fall through
to the low-rank rotation solver.  The width is then counted perpendicular to
the chosen axis.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from .boundary import center_points, extract_boundary
from .maskio import BinaryMask, CheckPoint, Patch, extract_patch, save_gray
from .pca import pca_slope
from .ransac import NoConsensusError, RansacParams, ransac_fit
from .tilt import TiltConfig, extract_angle, pre_rotation_search, tilt_solve
from .width import WidthError, measure_width_at

__all__ = [
    "CascadeConfig",
    "Measurement",
    "PointFailure",
    "GATE_MODES",
    "gate_margin",
    "is_low_complexity",
    "rpca_axis",
    "measure",
    "measure_batch",
]

log = logging.getLogger(__name__)

GATE_MODES = ("angle", "slope")
_VERTICAL_COS = 1e-9


@dataclass(frozen=True)
class CascadeConfig:
    """Gate threshold ``gamma_deg`` defaults to 10 degrees.

    With the default patch and RANSAC settings, 100% of the straight-strip
    calibration corpus (widths 3-15 px, 0-75 deg, 0-1 px jitter) stays on the
    PCA path at this value.
    """

    gamma_deg: float = 10.0
    gate_mode: str = "angle"
    patch_size: int = 64
    ransac: RansacParams = field(default_factory=RansacParams)
    tilt: TiltConfig = field(default_factory=TiltConfig)
    debug_dir: Optional[str] = None

    def __post_init__(self):
        if not 0 < self.gamma_deg < 90:
            raise ValueError("gamma_deg must be in (0, 90)")
        if self.gate_mode not in GATE_MODES:
            raise ValueError(f"gate_mode must be one of {GATE_MODES}")
        if self.patch_size < 8:
            raise ValueError("patch_size must be >= 8")


@dataclass(frozen=True)
class Measurement:
    check_point: CheckPoint
    width_px: int
    mpa_angle_deg: float
    method: str  # "pca" | "rpca"
    t1_angle_deg: Optional[float]
    t2_angle_deg: Optional[float]
    gate_margin_deg: Optional[float]
    t3_angle_deg: Optional[float] = None
    elapsed_pca: float = field(default=0.0, compare=False)
    elapsed_rpca: float = field(default=0.0, compare=False)

    def routing_sound(self, gamma_deg: float) -> bool:
        if self.method == "pca":
            return self.gate_margin_deg is not None and self.gate_margin_deg <= gamma_deg
        return self.gate_margin_deg is None or self.gate_margin_deg > gamma_deg

    def to_dict(self, timings: bool = False, scale_mm_per_px: Optional[float] = None) -> dict:
        out = {
            "check_point": {"x": self.check_point.x, "y": self.check_point.y},
            "width_px": self.width_px,
        }
        if scale_mm_per_px is not None:
            out["width_mm"] = self.width_px * scale_mm_per_px
        out.update(
            mpa_angle_deg=self.mpa_angle_deg,
            method=self.method,
            t1_angle_deg=self.t1_angle_deg,
            t2_angle_deg=self.t2_angle_deg,
            t3_angle_deg=self.t3_angle_deg,
            gate_margin_deg=self.gate_margin_deg,
        )
        if timings:
            out["elapsed_pca_ms"] = self.elapsed_pca * 1e3
            out["elapsed_rpca_ms"] = self.elapsed_rpca * 1e3
        return out


@dataclass(frozen=True)
class PointFailure:
    check_point: CheckPoint
    error: str
    kind: str

    def to_dict(self) -> dict:
        return {
            "check_point": {"x": self.check_point.x, "y": self.check_point.y},
            "error": self.error,
            "kind": self.kind,
        }


def _slope(angle: float) -> Optional[float]:
    c = math.cos(angle)
    if abs(c) < _VERTICAL_COS:
        return None
    return math.sin(angle) / c


def gate_margin(t1_angle: float, t2_angle: float, mode: str = "angle") -> float:
    """Disagreement between the two axis estimates.

    ``angle`` mode: circular distance modulo pi, in radians.  ``slope`` mode:
    ``|tan t1 - tan t2|`` (unitless), infinite when either axis is vertical.
    """
    if mode == "angle":
        d = abs(t1_angle - t2_angle) % math.pi
        return min(d, math.pi - d)
    if mode == "slope":
        s1, s2 = _slope(t1_angle), _slope(t2_angle)
        if s1 is None or s2 is None:
            return math.inf
        return abs(s1 - s2)
    raise ValueError(f"unknown gate mode {mode!r}")


def is_low_complexity(t1_angle: float, t2_angle: float, gamma: float, mode: str = "angle") -> bool:
    """``gamma`` is in radians; slope mode compares its numeric value directly."""
    return gate_margin(t1_angle, t2_angle, mode) <= gamma


def _dump_history(result, cp: CheckPoint, debug_dir: str) -> None:
    out = Path(debug_dir)
    out.mkdir(parents=True, exist_ok=True)
    for k, (low, sparse) in enumerate(result.history):
        for name, arr in (("lowrank", low), ("sparse", sparse)):
            peak = float(np.abs(arr).max()) or 1.0
            img = np.clip(np.abs(arr) / peak * 255.0, 0, 255).astype(np.uint8)
            save_gray(img, out / f"cp_{cp.x}_{cp.y}_iter{k:02d}_{name}.png")


def rpca_axis(patch: Patch, cfg: CascadeConfig, cp: Optional[CheckPoint] = None):
    """Axis angle from the low-rank solver, resolved against the 90 degree ambiguity.

    A rotation-only low-rank model cannot tell an axis from its perpendicular,
    so of ``theta`` and ``theta + pi/2`` the one giving the shorter
    perpendicular run through the check point is kept.

    Returns ``(axis_angle, raw_solver_angle, tilt_result)``.
    """
    tilt_cfg = cfg.tilt
    if cfg.debug_dir and not tilt_cfg.keep_history:
        tilt_cfg = replace(tilt_cfg, keep_history=True)
    init = pre_rotation_search(patch, tilt_cfg.angle_grid)
    result = tilt_solve(patch, init, tilt_cfg)
    if cfg.debug_dir and cp is not None:
        _dump_history(result, cp, cfg.debug_dir)
    theta = extract_angle(result)
    alt = (theta + math.pi / 2) % math.pi
    center = patch.center
    runs = []
    for cand in (theta, alt):
        try:
            runs.append(measure_width_at(patch, center, cand).width_px)
        except WidthError:
            runs.append(math.inf)
    axis = alt if runs[1] < runs[0] else theta
    return axis, theta, result


def measure(mask: BinaryMask, cp: CheckPoint, cfg: CascadeConfig = CascadeConfig()) -> Measurement:
    t0 = time.perf_counter()
    patch = extract_patch(mask, cp, cfg.patch_size)
    points = extract_boundary(patch)

    t1 = t2 = margin = None
    try:
        t1 = pca_slope(center_points(points)).angle
    except ValueError as exc:
        log.debug("PCA failed at %s: %s", cp, exc)
    try:
        t2 = ransac_fit(points, cfg.ransac, origin=patch.center).angle
    except (NoConsensusError, ValueError) as exc:
        log.debug("RANSAC found no edge at %s: %s", cp, exc)
    if t1 is not None and t2 is not None:
        margin = math.degrees(gate_margin(t1, t2, cfg.gate_mode))
    low = margin is not None and margin <= cfg.gamma_deg
    elapsed_pca = time.perf_counter() - t0

    elapsed_rpca = 0.0
    t3 = None
    if low:
        axis, method = t1, "pca"
    else:
        t_r = time.perf_counter()
        axis, t3, _ = rpca_axis(patch, cfg, cp)
        method = "rpca"
        elapsed_rpca = time.perf_counter() - t_r

    sample = measure_width_at(patch, patch.center, axis)
    deg = math.degrees
    return Measurement(
        check_point=cp,
        width_px=sample.width_px,
        mpa_angle_deg=deg(axis),
        method=method,
        t1_angle_deg=None if t1 is None else deg(t1),
        t2_angle_deg=None if t2 is None else deg(t2),
        gate_margin_deg=margin,
        t3_angle_deg=None if t3 is None else deg(t3),
        elapsed_pca=elapsed_pca,
        elapsed_rpca=elapsed_rpca,
    )


def _safe_measure(mask, cp, cfg) -> Union[Measurement, PointFailure]:
    try:
        return measure(mask, cp, cfg)
    except (ValueError, FloatingPointError) as exc:
        return PointFailure(cp, str(exc), type(exc).__name__)


def measure_batch(
    mask: BinaryMask,
    cps: Sequence[CheckPoint],
    cfg: CascadeConfig = CascadeConfig(),
    jobs: int = 1,
) -> List[Union[Measurement, PointFailure]]:
    """``measure`` over many points; failures come back as ``PointFailure`` in place."""
    cps = list(cps)
    if jobs <= 1 or len(cps) <= 1:
        return [_safe_measure(mask, cp, cfg) for cp in cps]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda cp: _safe_measure(mask, cp, cfg), cps))
