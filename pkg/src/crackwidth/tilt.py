"""
Rotation-only transform-invariant low-rank decomposition.

Finds the in-plane rotation ``theta`` under which a patch ``D`` splits into a
low-rank part plus a sparse part,

    D o tau(theta) = A + E,   minimise ||A||_* + lam ||E||_1,

by repeatedly linearising the warp around the current angle and solving the
resulting convex problem with an inexact augmented Lagrangian (ADMM) loop.

Warp convention: ``D o tau(theta)`` samples ``D`` at ``c + R(theta) (q - c)``
for output pixel ``q`` and patch centre ``c``; content lying along direction
``theta`` in ``D`` therefore comes out horizontal.  Sampling uses an
interpolating bicubic spline of the zero-padded patch, so the warp is smooth
in ``theta`` and its Jacobian is the spline's exact derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.ndimage import gaussian_filter

from .maskio import Patch, patch_center
from .pca import reduce_angle

__all__ = [
    "RotationParam",
    "TiltConfig",
    "TiltResult",
    "TiltDivergenceError",
    "DEFAULT_ANGLE_GRID",
    "svt",
    "soft_threshold",
    "nuclear_norm",
    "smooth",
    "warp",
    "RotationWarp",
    "rotation_jacobian",
    "pre_rotation_search",
    "tilt_solve",
    "extract_angle",
]

DEFAULT_ANGLE_GRID: Tuple[float, ...] = tuple(float(a) for a in range(0, 91, 5))


class TiltDivergenceError(FloatingPointError):
    """Non-finite values appeared inside the solver."""


@dataclass(frozen=True)
class RotationParam:
    theta: float

    @property
    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])

    @classmethod
    def from_degrees(cls, deg: float) -> "RotationParam":
        return cls(math.radians(deg))


@dataclass(frozen=True)
class TiltConfig:
    """Solver settings.

    ``lam=None`` means ``1/sqrt(max(H, W))``; ``mu_init=None`` means
    ``1.25 / ||D||_2`` of the normalised warped patch.  ``blur_sigma`` is a
    Gaussian pre-smoothing (pixels) applied before solving; binary masks have
    no usable gradient otherwise.  Set it to 0 to solve on the raw patch.
    """

    lam: Optional[float] = None
    inner_tol: float = 1e-6
    inner_max_iters: int = 500
    outer_tol: float = 1e-3
    outer_max_iters: int = 50
    mu_init: Optional[float] = None
    mu_growth: float = 1.25
    angle_grid: Tuple[float, ...] = DEFAULT_ANGLE_GRID
    objective_slack: float = 1e-6
    blur_sigma: float = 1.0
    keep_history: bool = False

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise ValueError("lam must be > 0")
        if not (self.inner_tol > 0 and self.outer_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.inner_max_iters < 1 or self.outer_max_iters < 1:
            raise ValueError("iteration limits must be >= 1")
        if self.mu_init is not None and not self.mu_init > 0:
            raise ValueError("mu_init must be > 0")
        if not self.mu_growth > 1:
            raise ValueError("mu_growth must be > 1")
        if self.blur_sigma < 0:
            raise ValueError("blur_sigma must be >= 0")
        if len(self.angle_grid) == 0:
            raise ValueError("angle_grid must not be empty")
        object.__setattr__(self, "angle_grid", tuple(float(a) for a in self.angle_grid))

    def weight(self, shape) -> float:
        return self.lam if self.lam is not None else 1.0 / math.sqrt(max(shape))


@dataclass(eq=False)
class TiltResult:
    low_rank: np.ndarray
    sparse: np.ndarray
    theta_total: float
    objective_trace: List[float]
    converged: bool
    theta_init: float = 0.0
    deltas: List[float] = field(default_factory=list)
    residual: float = 0.0
    lam: float = 0.0
    history: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    @property
    def rotation(self) -> RotationParam:
        return RotationParam(self.theta_total)


def soft_threshold(m, tau: float) -> np.ndarray:
    """Elementwise ``sign(x) * max(|x| - tau, 0)``."""
    if tau < 0:
        raise ValueError("threshold must be >= 0")
    m = np.asarray(m, dtype=float)
    return np.sign(m) * np.maximum(np.abs(m) - tau, 0.0)


def svt(m, tau: float) -> np.ndarray:
    """Singular value thresholding, the proximal map of ``tau * ||.||_*``."""
    if tau < 0:
        raise ValueError("threshold must be >= 0")
    m = np.asarray(m, dtype=float)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    k = int(np.count_nonzero(s))
    if k == 0:
        return np.zeros_like(m)
    return (u[:, :k] * s[:k]) @ vt[:k]


def nuclear_norm(m) -> float:
    return float(np.linalg.svd(np.asarray(m, dtype=float), compute_uv=False).sum())


def _as_array(patch) -> np.ndarray:
    return patch.data if isinstance(patch, Patch) else np.asarray(patch, dtype=float)


def smooth(data: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return np.asarray(data, dtype=float)
    return gaussian_filter(np.asarray(data, dtype=float), sigma, mode="constant", cval=0.0)


class RotationWarp:
    """Rotation warps and their angle derivative for one fixed patch.

    The spline is fitted once; ``warp`` and ``jacobian`` then cost one
    evaluation each.  Samples beyond the zero padding read 0.
    """

    PAD = 4

    def __init__(self, data):
        data = np.asarray(data, dtype=float)
        h, w = data.shape
        self.data = data
        self.shape = data.shape
        p = self.PAD
        self._spline = RectBivariateSpline(
            np.arange(-p, h + p), np.arange(-p, w + p), np.pad(data, p), kx=3, ky=3, s=0
        )
        cx, cy = patch_center(data.shape)
        ys, xs = np.mgrid[0:h, 0:w].astype(float)
        self._c = (cx, cy)
        self._dx, self._dy = xs - cx, ys - cy

    def source(self, theta: float):
        """Sample positions ``(sx, sy)`` for every output pixel."""
        c, s = math.cos(theta), math.sin(theta)
        cx, cy = self._c
        return cx + c * self._dx - s * self._dy, cy + s * self._dx + c * self._dy

    def _inside(self, sx, sy):
        h, w = self.shape
        p = self.PAD
        return (sx >= -p) & (sx <= w - 1 + p) & (sy >= -p) & (sy <= h - 1 + p)

    def warp(self, theta: float) -> np.ndarray:
        if theta == 0.0:
            return self.data.copy()
        sx, sy = self.source(theta)
        return np.where(self._inside(sx, sy), self._spline.ev(sy, sx), 0.0)

    def jacobian(self, theta: float) -> np.ndarray:
        sx, sy = self.source(theta)
        c, s = math.cos(theta), math.sin(theta)
        # d(sx, sy)/d theta
        vx = -s * self._dx - c * self._dy
        vy = c * self._dx - s * self._dy
        gx = self._spline.ev(sy, sx, dy=1)
        gy = self._spline.ev(sy, sx, dx=1)
        return np.where(self._inside(sx, sy), gx * vx + gy * vy, 0.0)


def warp(patch, theta: float) -> np.ndarray:
    """``D o tau(theta)``, zero outside the frame."""
    return RotationWarp(_as_array(patch)).warp(theta)


def rotation_jacobian(patch, rp: RotationParam) -> np.ndarray:
    """``d(D o tau)/d theta`` at ``rp.theta``, exact for the spline warp."""
    return RotationWarp(_as_array(patch)).jacobian(rp.theta)


def pre_rotation_search(patch, angle_grid: Sequence[float] = DEFAULT_ANGLE_GRID) -> RotationParam:
    """Grid angle (degrees in, radians out) with the lowest normalised nuclear norm.

    Ties go to the lowest angle.
    """
    grid = sorted(float(a) for a in angle_grid)
    if not grid:
        raise ValueError("angle grid must not be empty")
    warper = RotationWarp(_as_array(patch))
    best_deg, best_val = None, math.inf
    for deg in grid:
        img = warper.warp(math.radians(deg))
        nrm = np.linalg.norm(img)
        val = nuclear_norm(img / nrm) if nrm > 0 else 0.0
        if best_deg is None or val < best_val - 1e-12 * max(1.0, best_val):
            best_deg, best_val = deg, val
    return RotationParam.from_degrees(best_deg)


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise TiltDivergenceError("non-finite value in low-rank solver iterate")


def _decompose(img, jac, lam, cfg: TiltConfig, solve_delta: bool = True):
    """Inexact ALM for ``img + jac*dtheta = A + E``.

    Returns ``(A, E, dtheta, relative_residual)``.
    """
    norm_f = np.linalg.norm(img)
    norm_2 = np.linalg.norm(img, 2)
    y = img / max(norm_2, np.abs(img).max() / lam)
    mu = cfg.mu_init if cfg.mu_init is not None else 1.25 / norm_2
    a = np.zeros_like(img)
    e = np.zeros_like(img)
    dtheta = 0.0
    jj = float(np.vdot(jac, jac)) if solve_delta else 0.0
    rel = math.inf
    for _ in range(cfg.inner_max_iters):
        shifted = img + jac * dtheta
        a = svt(shifted - e + y / mu, 1.0 / mu)
        e = soft_threshold(shifted - a + y / mu, lam / mu)
        if jj > 0.0:
            dtheta = float(np.vdot(jac, a + e - img - y / mu)) / jj
        z = img + jac * dtheta - a - e
        y = y + mu * z
        mu *= cfg.mu_growth
        _check_finite(a, e, y)
        if not math.isfinite(dtheta):
            raise TiltDivergenceError("non-finite angle increment")
        rel = float(np.linalg.norm(z)) / norm_f
        if rel < cfg.inner_tol:
            break
    return a, e, dtheta, rel


def _normalised(warper: RotationWarp, theta: float):
    raw = warper.warp(theta)
    nrm = float(np.linalg.norm(raw))
    if nrm == 0.0:
        return None, None
    jac_raw = warper.jacobian(theta)
    img = raw / nrm
    # derivative of raw/||raw|| rather than of raw
    jac = jac_raw / nrm - (float(np.vdot(jac_raw, raw)) / nrm**3) * raw
    return img, jac


def tilt_solve(patch, init: RotationParam = RotationParam(0.0), cfg: TiltConfig = TiltConfig()) -> TiltResult:
    """Iteratively linearised low-rank + sparse recovery of the patch rotation.

    Each outer step warps by the current angle, normalises to unit Frobenius
    norm and solves the linearised problem for an angle increment.  A step
    whose objective rises above the last accepted one is halved until it
    either improves or shrinks below ``outer_tol``.

    The angle iterations run on the smoothed patch; the returned low-rank and
    sparse parts come from a final decomposition of the unsmoothed patch
    warped by the returned angle (normalised to unit Frobenius norm).
    """
    data = _as_array(patch)
    if not np.all(np.isfinite(data)):
        raise ValueError("patch contains non-finite values")
    raw = np.asarray(data, dtype=float)
    data = smooth(raw, cfg.blur_sigma)
    lam = cfg.weight(data.shape)
    warper = RotationWarp(data)

    theta0 = float(init.theta)
    base = theta0
    step = 0.0
    best_obj = None
    trace: List[float] = []
    deltas: List[float] = []
    history = []
    converged = False

    for _ in range(cfg.outer_max_iters):
        theta = base + step
        img, jac = _normalised(warper, theta)
        if img is None:
            # nothing left in frame; an empty patch is trivially low-rank
            z = np.zeros_like(data)
            return TiltResult(z, z.copy(), theta0, [0.0], True, theta0, [], 0.0, lam)
        a, e, dtheta, _ = _decompose(img, jac, lam, cfg)
        obj = nuclear_norm(a) + lam * float(np.abs(e).sum())
        if best_obj is not None and obj > best_obj * (1.0 + cfg.objective_slack):
            step *= 0.5
            if abs(step) < cfg.outer_tol:
                step = 0.0
                converged = True
                break
            continue
        if best_obj is not None:
            deltas.append(step)
        base, best_obj = theta, obj
        trace.append(obj)
        if cfg.keep_history:
            history.append((a, e))
        step = dtheta
        if abs(dtheta) < cfg.outer_tol:
            converged = True
            break
    # the last proposed step is only taken once it is known to be final
    if converged and step != 0.0:
        deltas.append(step)
        base += step

    img, _ = _normalised(RotationWarp(raw), base)
    if img is None:
        z = np.zeros_like(data)
        return TiltResult(z, z.copy(), base, trace, converged, theta0, deltas, 0.0, lam, history)
    a, e, _, rel = _decompose(img, np.zeros_like(img), lam, cfg, solve_delta=False)
    return TiltResult(
        low_rank=a,
        sparse=e,
        theta_total=base,
        objective_trace=trace,
        converged=converged,
        theta_init=theta0,
        deltas=deltas,
        residual=rel,
        lam=lam,
        history=history,
    )


def extract_angle(result: TiltResult) -> float:
    """Signed accumulated rotation, read back from the rotation matrix and reduced to [0, pi)."""
    m = RotationParam(result.theta_total).matrix
    return reduce_angle(math.atan2(m[0, 1], m[0, 0]))
