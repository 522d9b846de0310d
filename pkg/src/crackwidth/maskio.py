"""
Binary crack masks, check-point patches and patch rotation.

Coordinates are pixel coordinates with ``x`` the column and ``y`` the row
(growing downwards).  Angles are measured in that frame, so an angle of
``atan2(dy, dx)`` describes a direction in the image as it is stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from PIL import Image
from scipy.ndimage import map_coordinates

__all__ = [
    "BinaryMask",
    "Patch",
    "CheckPoint",
    "NotCrackPixelError",
    "MIN_PATCH_SIZE",
    "load_mask",
    "save_mask",
    "save_gray",
    "extract_patch",
    "rotate_patch",
    "rotate_point",
    "patch_center",
]

MIN_PATCH_SIZE = 8
CRACK_LEVEL = 128


class NotCrackPixelError(ValueError):
    """Raised when a check point does not sit on a crack pixel."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class CheckPoint:
    x: int
    y: int

    def as_tuple(self) -> Tuple[int, int]:
        return (self.x, self.y)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Full-image crack raster; ``data[y, x]`` is True on crack pixels."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise ValueError("mask must be 2-D")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("mask must be at least 1x1")
        object.__setattr__(self, "data", _frozen(data.astype(bool)))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def contains(self, cp: CheckPoint) -> bool:
        return 0 <= cp.x < self.width and 0 <= cp.y < self.height

    def is_crack(self, cp: CheckPoint) -> bool:
        return self.contains(cp) and bool(self.data[cp.y, cp.x])

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Patch:
    """``H x W`` intensity block cut from a mask.

    ``origin`` is the (x, y) of the top-left pixel in the source mask.
    """

    data: np.ndarray
    origin: Tuple[int, int] = (0, 0)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError("patch must be 2-D")
        if data.shape[0] < MIN_PATCH_SIZE or data.shape[1] < MIN_PATCH_SIZE:
            raise ValueError(f"patch must be at least {MIN_PATCH_SIZE}x{MIN_PATCH_SIZE}")
        if not np.all(np.isfinite(data)):
            raise ValueError("patch contains non-finite values")
        if data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("patch intensities must lie in [0, 1]")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def size_h(self) -> int:
        return self.data.shape[0]

    @property
    def size_w(self) -> int:
        return self.data.shape[1]

    @property
    def center(self) -> Tuple[int, int]:
        return patch_center(self.data.shape)

    def binary(self, level: float = 0.5) -> np.ndarray:
        return self.data >= level


def patch_center(shape) -> Tuple[int, int]:
    """Pixel (x, y) about which patches rotate; the check point lands here."""
    h, w = shape
    return (w // 2, h // 2)


def load_mask(path) -> BinaryMask:
    """Read an 8-bit single-channel PNG/PGM; values >= 128 are crack."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "1":
                im = im.convert("L")
            elif mode == "P":
                # palette images are only accepted when the palette is grey
                rgb = np.asarray(im.convert("RGB"))
                if not (np.array_equal(rgb[..., 0], rgb[..., 1]) and np.array_equal(rgb[..., 1], rgb[..., 2])):
                    raise ValueError(f"{path}: multi-channel (colour palette) image")
                im = im.convert("L")
            elif mode != "L":
                raise ValueError(f"{path}: expected an 8-bit single-channel image, got mode {mode!r}")
            arr = np.asarray(im)
    except (OSError, SyntaxError) as exc:
        raise ValueError(f"{path}: unreadable image ({exc})") from exc
    if arr.size == 0:
        raise ValueError(f"{path}: zero-size image")
    return BinaryMask(arr >= CRACK_LEVEL)


def save_gray(array: np.ndarray, path) -> None:
    """Write a uint8 grey or RGB array; PGM when the suffix asks for it."""
    path = Path(path)
    fmt = "PPM" if path.suffix.lower() in (".pgm", ".ppm", ".pnm") else "PNG"
    Image.fromarray(np.ascontiguousarray(array)).save(path, format=fmt)


def save_mask(mask: BinaryMask, path) -> None:
    save_gray(np.where(mask.data, 255, 0).astype(np.uint8), path)


def extract_patch(mask: BinaryMask, cp: CheckPoint, size: int = 64) -> Patch:
    """Square ``size x size`` patch with ``cp`` at ``patch_center``.

    Pixels falling outside the mask are background.
    """
    if size < MIN_PATCH_SIZE:
        raise ValueError(f"patch size must be >= {MIN_PATCH_SIZE}, got {size}")
    if not mask.contains(cp):
        raise NotCrackPixelError(f"check point ({cp.x}, {cp.y}) is outside the mask")
    if not mask.is_crack(cp):
        raise NotCrackPixelError(f"check point ({cp.x}, {cp.y}) is not a crack pixel")
    cx, cy = patch_center((size, size))
    x0, y0 = cp.x - cx, cp.y - cy
    out = np.zeros((size, size), dtype=float)
    sx0, sy0 = max(x0, 0), max(y0, 0)
    sx1, sy1 = min(x0 + size, mask.width), min(y0 + size, mask.height)
    out[sy0 - y0:sy1 - y0, sx0 - x0:sx1 - x0] = mask.data[sy0:sy1, sx0:sx1]
    return Patch(out, origin=(x0, y0))


def _check_angle(angle: float) -> float:
    angle = float(angle)
    if not math.isfinite(angle):
        raise ValueError(f"rotation angle must be finite, got {angle}")
    return angle


def rotate_point(pt, angle: float, shape) -> Tuple[float, float]:
    """Where (x, y) lands after ``rotate_patch`` by ``angle`` on a patch of ``shape``."""
    angle = _check_angle(angle)
    cx, cy = patch_center(shape)
    c, s = math.cos(angle), math.sin(angle)
    dx, dy = pt[0] - cx, pt[1] - cy
    return (cx + c * dx - s * dy, cy + s * dx + c * dy)


def _rotate_array(data: np.ndarray, angle: float, columns: Optional[slice] = None) -> np.ndarray:
    """Bilinear rotation about the patch centre; ``columns`` limits the output to those columns."""
    h, w = data.shape
    cx, cy = patch_center(data.shape)
    c, s = math.cos(angle), math.sin(angle)
    ys, xs = np.mgrid[0:h, 0:w].astype(float)
    if columns is not None:
        ys, xs = ys[:, columns], xs[:, columns]
    dx, dy = xs - cx, ys - cy
    # inverse map: output pixel q reads the source at R(-angle) (q - c) + c
    src_x = cx + c * dx + s * dy
    src_y = cy - s * dx + c * dy
    out = map_coordinates(data, [src_y, src_x], order=1, mode="grid-constant", cval=0.0, prefilter=False)
    return np.clip(out, 0.0, 1.0)


def rotate_patch(patch: Patch, angle: float) -> Patch:
    """Rotate the patch content by ``angle`` radians about its centre.

    A feature pointing along ``angle0`` points along ``angle0 + angle``
    afterwards.  Bilinear resampling; samples from outside the frame read 0.
    """
    angle = _check_angle(angle)
    if angle == 0.0:
        return Patch(patch.data, origin=patch.origin)
    return Patch(_rotate_array(patch.data, angle), origin=patch.origin)
