"""
Corpus evaluation against ground-truth widths, routing tallies, annotation
CSV I/O, overlay rendering and the standard synthetic corpora.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from skimage.draw import line as draw_line

from .cascade import CascadeConfig, Measurement, PointFailure, measure_batch
from .maskio import BinaryMask, CheckPoint, save_gray
from .synth import SyntheticSpec, synth_crack
from .width import mae, mse

__all__ = [
    "EvalReport",
    "evaluate",
    "render_overlay",
    "read_points_csv",
    "write_annotations",
    "strip_corpus_specs",
    "routing_corpus_specs",
    "default_corpus_specs",
    "build_corpus",
    "CORPORA",
]

ANNOTATION_HEADER = ("x", "y", "gt_width_px")

Truth = Tuple[CheckPoint, float]
CorpusItem = Tuple[BinaryMask, Sequence[Truth]]


@dataclass
class EvalReport:
    """Aggregate errors and routing counts.

    ``pca_count + rpca_count == n_points``; points that raised are listed in
    ``errors`` and take no part in the metrics.
    """

    mae: float
    mse: float
    n_points: int
    pca_count: int
    rpca_count: int
    per_point: List[Tuple[Measurement, float]] = field(default_factory=list)
    errors: List[PointFailure] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def rpca_fraction(self) -> float:
        return self.rpca_count / self.n_points if self.n_points else 0.0

    def to_dict(self, timings: bool = False, scale_mm_per_px: Optional[float] = None) -> dict:
        out = {
            "mae": self.mae,
            "mse": self.mse,
            "n_points": self.n_points,
            "pca_count": self.pca_count,
            "rpca_count": self.rpca_count,
            "n_errors": len(self.errors),
        }
        rows = []
        for m, gt in self.per_point:
            row = m.to_dict(timings=timings, scale_mm_per_px=scale_mm_per_px)
            row["gt_width_px"] = gt
            rows.append(row)
        out["per_point"] = rows
        out["errors"] = [e.to_dict() for e in self.errors]
        if timings:
            out["elapsed_ms"] = self.elapsed * 1e3
            for tag in ("pca", "rpca"):
                vals = [getattr(m, "elapsed_" + tag) for m, _ in self.per_point if m.method == tag]
                out[f"median_{tag}_path_ms"] = float(np.median(vals)) * 1e3 if vals else None
        return out


def _pairs(truths: Iterable) -> List[Truth]:
    out = []
    for t in truths:
        cp, gt = tuple(t)[:2]
        out.append((cp, float(gt)))
    return out


def evaluate(corpus: Sequence[CorpusItem], cfg: CascadeConfig = CascadeConfig(), jobs: int = 1) -> EvalReport:
    """Run the cascade over every annotated point and aggregate.

    Parameters
    ----------
    corpus : sequence of (BinaryMask, truths)
        ``truths`` holds ``(CheckPoint, gt_width_px)`` pairs (or anything
        unpacking like one, e.g. ``TruthPoint``).
    cfg : CascadeConfig
    jobs : int
        Worker threads per mask.  Results do not depend on it.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("empty corpus")
    t0 = time.perf_counter()
    per_point: List[Tuple[Measurement, float]] = []
    errors: List[PointFailure] = []
    for mask, truths in corpus:
        pairs = _pairs(truths)
        results = measure_batch(mask, [cp for cp, _ in pairs], cfg, jobs=jobs)
        for res, (_, gt) in zip(results, pairs):
            if isinstance(res, PointFailure):
                errors.append(res)
            else:
                per_point.append((res, gt))
    elapsed = time.perf_counter() - t0
    if per_point:
        widths = [m.width_px for m, _ in per_point]
        gts = [g for _, g in per_point]
        e_abs, e_sq = mae(widths, gts), mse(widths, gts)
    else:
        e_abs = e_sq = math.nan
    pca = sum(1 for m, _ in per_point if m.method == "pca")
    return EvalReport(
        mae=e_abs,
        mse=e_sq,
        n_points=len(per_point),
        pca_count=pca,
        rpca_count=len(per_point) - pca,
        per_point=per_point,
        errors=errors,
        elapsed=elapsed,
    )


def _segment(img, x0, y0, x1, y1, colour):
    h, w = img.shape[:2]
    rr, cc = draw_line(int(round(y0)), int(round(x0)), int(round(y1)), int(round(x1)))
    keep = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
    img[rr[keep], cc[keep]] = colour


RED = (255, 0, 0)
BLUE = (0, 0, 255)


def render_overlay(mask: BinaryMask, measurements: Sequence[Measurement], path) -> np.ndarray:
    """Draw the crack (white), each axis (red), width chord (blue) and check point (red dot).

    The axis segment extends ``max(8, 2 * width)`` pixels to each side of the
    point; the blue chord spans the measured width.  Returns the RGB array
    that was written.
    """
    img = np.zeros(mask.data.shape + (3,), dtype=np.uint8)
    img[mask.data] = 255
    for m in measurements:
        x, y = m.check_point.x, m.check_point.y
        a = math.radians(m.mpa_angle_deg)
        ux, uy = math.cos(a), math.sin(a)
        half = max(8.0, 2.0 * m.width_px)
        _segment(img, x - half * ux, y - half * uy, x + half * ux, y + half * uy, RED)
        hw = m.width_px / 2.0
        _segment(img, x + hw * uy, y - hw * ux, x - hw * uy, y + hw * ux, BLUE)
        img[max(y - 1, 0):y + 2, max(x - 1, 0):x + 2] = RED
    try:
        save_gray(img, path)
    except OSError as exc:
        raise OSError(f"could not write overlay to {path}: {exc}") from exc
    return img


def read_points_csv(path) -> List[Tuple[CheckPoint, Optional[float]]]:
    """Rows of ``x,y[,gt_width_px]``; ``gt`` is ``None`` when the column is absent or blank."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"x", "y"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected a header with columns x,y")
        for n, row in enumerate(reader, start=2):
            try:
                cp = CheckPoint(int(row["x"]), int(row["y"]))
                raw = (row.get("gt_width_px") or "").strip()
                gt = float(raw) if raw else None
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{n}: bad row {row!r}") from exc
            out.append((cp, gt))
    return out


def write_annotations(path, truths: Iterable) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(ANNOTATION_HEADER)
        for cp, gt in _pairs(truths):
            wr.writerow([cp.x, cp.y, repr(gt)])


def strip_corpus_specs() -> List[SyntheticSpec]:
    """48 straight strips: widths 3/5/9/15, angles 0-75 deg by 15, jitter 0/1."""
    return [
        SyntheticSpec("strip", float(w), float(a), float(j), seed=w * 1000 + a * 10 + j)
        for w in (3, 5, 9, 15)
        for a in (0, 15, 30, 45, 60, 75)
        for j in (0, 1)
    ]


def routing_corpus_specs() -> List[SyntheticSpec]:
    """Two crosses and six meshes, check points drawn around crossings."""
    specs = [
        SyntheticSpec("cross", 5, 10, 0, seed=1, width2_px=9, sampling="intersection"),
        SyntheticSpec("cross", 7, 35, 0, seed=2, width2_px=4, sampling="intersection"),
    ]
    for i, a in enumerate((0, 20, 40, 60, 80, 100)):
        specs.append(SyntheticSpec("alligator-mesh", 6, a, i % 2, seed=10 + i, sampling="intersection"))
    return specs


def default_corpus_specs() -> List[SyntheticSpec]:
    """One transverse strip, one longitudinal strip, six meshes (104 points)."""
    specs = [
        SyntheticSpec("strip", 5, 0, 1, seed=101),
        SyntheticSpec("strip", 7, 90, 1, seed=102),
    ]
    for i, a in enumerate((5, 25, 45, 65, 85, 125)):
        specs.append(SyntheticSpec("alligator-mesh", 5 + i % 3, a, 1, seed=200 + i))
    return specs


CORPORA = {
    "default": default_corpus_specs,
    "strip": strip_corpus_specs,
    "routing": routing_corpus_specs,
}


def build_corpus(specs: Sequence[SyntheticSpec]) -> List[CorpusItem]:
    return [synth_crack(s) for s in specs]
