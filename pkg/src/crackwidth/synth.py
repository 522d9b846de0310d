"""
Synthetic crack masks with analytic ground-truth widths.

Every shape is a union of straight segments.  A segment has its own axis
coordinate ``s`` (along the crack) and ``perp`` (across it); a pixel centre
belongs to it when ``lo(s) <= perp < hi(s)``.  Boundary jitter splits each
segment into short runs along ``s`` whose two edges are displaced
independently, with the local width changing by at most the jitter
amplitude.  The ground truth at a check point is ``hi - lo`` of the run it
lies in, so it is exact for the rendered geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .maskio import BinaryMask, CheckPoint

__all__ = ["SyntheticSpec", "Segment", "TruthPoint", "KINDS", "synth_crack", "build_segments", "rasterize"]

KINDS = ("strip", "zigzag", "cross", "alligator-mesh")
SAMPLINGS = ("uniform", "intersection")


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str = "strip"
    width_px: float = 5.0
    angle_deg: float = 0.0
    jitter_px: float = 0.0
    canvas: Tuple[int, int] = (160, 160)  # (w, h)
    seed: int = 0
    n_points: int = 13
    width2_px: Optional[float] = None  # second arm of a cross
    cross_angle_deg: float = 90.0
    sampling: str = "uniform"
    margin_px: int = 6  # check points stay this far from the canvas edge

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.width_px < 1:
            raise ValueError("width_px must be >= 1")
        if self.width2_px is not None and self.width2_px < 1:
            raise ValueError("width2_px must be >= 1")
        if self.jitter_px < 0:
            raise ValueError("jitter_px must be >= 0")
        if self.n_points < 0:
            raise ValueError("n_points must be >= 0")
        if self.sampling not in SAMPLINGS:
            raise ValueError(f"sampling must be one of {SAMPLINGS}")
        w, h = self.canvas
        if w < 1 or h < 1:
            raise ValueError("canvas must be positive")


@dataclass
class Segment:
    center: Tuple[float, float]
    angle: float
    width: float
    half_length: float = math.inf
    run_edges: np.ndarray = field(default_factory=lambda: np.zeros(0))
    e_lo: np.ndarray = field(default_factory=lambda: np.zeros(1))
    e_hi: np.ndarray = field(default_factory=lambda: np.zeros(1))

    @property
    def d(self) -> Tuple[float, float]:
        return (math.cos(self.angle), math.sin(self.angle))

    @property
    def n(self) -> Tuple[float, float]:
        return (-math.sin(self.angle), math.cos(self.angle))

    def coords(self, xs, ys):
        dx, dy = np.asarray(xs, dtype=float) - self.center[0], np.asarray(ys, dtype=float) - self.center[1]
        d, n = self.d, self.n
        return dx * d[0] + dy * d[1], dx * n[0] + dy * n[1]

    def edges(self, s):
        run = np.searchsorted(self.run_edges, s, side="right")
        return -self.width / 2 + self.e_lo[run], self.width / 2 + self.e_hi[run]

    def contains(self, xs, ys):
        s, p = self.coords(xs, ys)
        lo, hi = self.edges(s)
        return (p >= lo) & (p < hi) & (np.abs(s) <= self.half_length)

    def distance_to_run_edge(self, s: float) -> float:
        if self.run_edges.size == 0:
            return math.inf
        return float(np.min(np.abs(self.run_edges - s)))

    def point_at(self, s: float, p: float) -> Tuple[float, float]:
        d, n = self.d, self.n
        return (self.center[0] + s * d[0] + p * n[0], self.center[1] + s * d[1] + p * n[1])


@dataclass(frozen=True)
class TruthPoint:
    """A check point with its ground-truth width.  Unpacks as ``(cp, gt)``."""

    check_point: CheckPoint
    gt_width_px: float
    segment: int = 0
    near_intersection: bool = False

    def __iter__(self) -> Iterator:
        return iter((self.check_point, self.gt_width_px))


def _add_jitter(seg: Segment, amp: float, rng: np.random.Generator, extent: float) -> None:
    if amp <= 0:
        return
    edges = []
    s = -extent + rng.uniform(0, 3)
    while s < extent:
        edges.append(s)
        s += rng.integers(3, 9)
    edges = np.array(edges)
    k = len(edges) + 1
    e_lo = rng.uniform(-amp, amp, size=k)
    # keep the local width change within +-amp and the width >= 1
    hi_min = np.maximum(-amp, e_lo - amp)
    hi_max = np.minimum(amp, e_lo + amp)
    e_hi = rng.uniform(hi_min, hi_max)
    too_thin = seg.width + e_hi - e_lo < 1.0
    e_hi[too_thin] = e_lo[too_thin]
    seg.run_edges, seg.e_lo, seg.e_hi = edges, e_lo, e_hi


def build_segments(spec: SyntheticSpec, rng: np.random.Generator) -> List[Segment]:
    cw, ch = spec.canvas
    center = (cw / 2.0, ch / 2.0)
    extent = math.hypot(cw, ch)
    a = math.radians(spec.angle_deg)
    w = float(spec.width_px)
    segs: List[Segment] = []

    if spec.kind == "strip":
        segs.append(Segment(center, a, w))
    elif spec.kind == "cross":
        w2 = float(spec.width2_px if spec.width2_px is not None else spec.width_px)
        segs.append(Segment(center, a, w))
        segs.append(Segment(center, a + math.radians(spec.cross_angle_deg), w2))
    elif spec.kind == "zigzag":
        seg_len = max(40.0, 4 * w)
        zig = math.radians(30.0)
        usable = min(cw, ch) - 2 * (w + spec.margin_px)
        n_seg = max(2, int(usable // (seg_len * math.cos(zig))))
        d = (math.cos(a), math.sin(a))
        total = n_seg * seg_len * math.cos(zig)
        start = (center[0] - d[0] * total / 2, center[1] - d[1] * total / 2)
        p = start
        for i in range(n_seg):
            ang = a + (zig if i % 2 == 0 else -zig)
            q = (p[0] + seg_len * math.cos(ang), p[1] + seg_len * math.sin(ang))
            mid = ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2)
            segs.append(Segment(mid, ang, w, half_length=seg_len / 2 + w / 2))
            p = q
    elif spec.kind == "alligator-mesh":
        for family, base in ((0, a), (1, a + math.pi / 2)):
            n_lines = 3
            spacing = min(cw, ch) / (n_lines + 1)
            for i in range(n_lines):
                off = (i - (n_lines - 1) / 2) * spacing + rng.uniform(-0.15, 0.15) * spacing
                ang = base + math.radians(rng.uniform(-15, 15))
                nrm = (-math.sin(base), math.cos(base))
                c = (center[0] + off * nrm[0], center[1] + off * nrm[1])
                width = max(2.0, w * rng.uniform(0.6, 1.4))
                segs.append(Segment(c, ang, width))
    else:  # pragma: no cover - guarded by SyntheticSpec
        raise ValueError(spec.kind)

    for seg in segs:
        _add_jitter(seg, spec.jitter_px, rng, extent)
    _check_fits(spec, segs)
    return segs


def _check_fits(spec: SyntheticSpec, segs: Sequence[Segment]) -> None:
    cw, ch = spec.canvas
    widest = max(s.width for s in segs) + 2 * spec.jitter_px
    if min(cw, ch) < 3 * widest + 2 * spec.margin_px:
        raise ValueError(
            f"shape does not fit canvas {cw}x{ch}: needs >= {3 * widest + 2 * spec.margin_px:.0f} px per side"
        )
    for seg in segs:
        if math.isfinite(seg.half_length):
            for sign in (-1, 1):
                x, y = seg.point_at(sign * (seg.half_length - seg.width / 2), 0.0)
                if not (widest <= x <= cw - widest and widest <= y <= ch - widest):
                    raise ValueError("shape does not fit canvas")


def rasterize(segs: Sequence[Segment], canvas: Tuple[int, int]) -> np.ndarray:
    cw, ch = canvas
    ys, xs = np.mgrid[0:ch, 0:cw].astype(float)
    out = np.zeros((ch, cw), dtype=bool)
    for seg in segs:
        out |= seg.contains(xs, ys)
    return out


def _in_any(segs, x, y, skip=None) -> bool:
    return any(bool(seg.contains(x, y)) for i, seg in enumerate(segs) if i != skip)


def _clean_chord(segs, k, px, py, canvas) -> Optional[float]:
    """Ground-truth width at pixel (px, py) of segment ``k``, or None if the
    perpendicular chord there is obstructed, touches the canvas edge, or sits
    on a jitter run boundary."""
    seg = segs[k]
    s, p = seg.coords(px, py)
    s, p = float(s), float(p)
    if seg.distance_to_run_edge(s) < 1.0:
        return None
    if math.isfinite(seg.half_length) and abs(s) > seg.half_length - seg.width - 2:
        return None
    lo, hi = (float(v) for v in seg.edges(s))
    cw, ch = canvas
    for q in np.linspace(lo, hi, max(3, int((hi - lo) * 4))):
        x, y = seg.point_at(s, float(q))
        if _in_any(segs, x, y, skip=k):
            return None
    for q in (lo - 0.75, hi + 0.75):
        x, y = seg.point_at(s, q)
        if not (0 <= x < cw - 1 and 0 <= y < ch - 1):
            return None
        if _in_any(segs, x, y):
            return None
    return hi - lo


def _intersections(segs) -> List[Tuple[int, int, float, float]]:
    """(i, j, s_i, s_j) for every crossing pair, s measured along each segment."""
    out = []
    for i in range(len(segs)):
        for j in range(i + 1, len(segs)):
            a, b = segs[i], segs[j]
            m = np.array([[a.d[0], -b.d[0]], [a.d[1], -b.d[1]]])
            if abs(np.linalg.det(m)) < 1e-6:
                continue
            rhs = np.array([b.center[0] - a.center[0], b.center[1] - a.center[1]])
            si, sj = np.linalg.solve(m, rhs)
            if abs(si) <= a.half_length and abs(sj) <= b.half_length:
                out.append((i, j, float(si), float(sj)))
    return out


def synth_crack(spec: SyntheticSpec) -> Tuple[BinaryMask, List[TruthPoint]]:
    """Render ``spec`` and pick ``n_points`` check points with analytic widths."""
    rng = np.random.default_rng(spec.seed)
    segs = build_segments(spec, rng)
    raster = rasterize(segs, spec.canvas)
    if not raster.any():
        raise ValueError("shape does not intersect the canvas")
    mask = BinaryMask(raster)
    cw, ch = spec.canvas
    m = spec.margin_px
    crossings = _intersections(segs) if spec.sampling == "intersection" else []
    if spec.sampling == "intersection" and not crossings:
        raise ValueError("intersection sampling needs a shape with crossings")

    points: List[TruthPoint] = []
    seen = set()
    attempts = 0
    while len(points) < spec.n_points:
        attempts += 1
        if attempts > 5000 * max(1, spec.n_points):
            raise ValueError("could not place enough check points on the shape")
        near = False
        if crossings:
            i, j, si, sj = crossings[rng.integers(len(crossings))]
            k, s0, other = (i, si, segs[j]) if rng.random() < 0.5 else (j, sj, segs[i])
            sin_phi = abs(math.sin(segs[k].angle - other.angle)) or 1.0
            reach = (other.width / 2 + spec.jitter_px) / sin_phi + 12.0
            s = s0 + rng.choice([-1.0, 1.0]) * rng.uniform(0.0, reach)
            near = True
        else:
            k = int(rng.integers(len(segs)))
            lim = min(segs[k].half_length, math.hypot(cw, ch) / 2)
            s = rng.uniform(-lim, lim)
        seg = segs[k]
        lo, hi = (float(v) for v in seg.edges(s))
        inner = max(0.0, (hi - lo) / 2 - 1.0)
        mid = (lo + hi) / 2
        x, y = seg.point_at(s, mid + rng.uniform(-inner, inner))
        px, py = int(round(x)), int(round(y))
        if not (m <= px < cw - m and m <= py < ch - m) or (px, py) in seen:
            continue
        if not (raster[py, px] and seg.contains(px, py)) or _in_any(segs, px, py, skip=k):
            continue
        gt = _clean_chord(segs, k, px, py, spec.canvas)
        if gt is None:
            continue
        seen.add((px, py))
        points.append(TruthPoint(CheckPoint(px, py), gt, k, near))
    return mask, points
