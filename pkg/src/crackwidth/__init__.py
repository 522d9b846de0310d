"""Crack width at check points of a binary crack mask.

A fast PCA axis estimate is checked against a RANSAC edge line; patches
where the two disagree are handed to a rotation-only low-rank solver.  The
width is counted perpendicular to the resulting axis.
"""

from .boundary import CenteredMatrix, PointSet, center_points, extract_boundary
from .cascade import CascadeConfig, Measurement, PointFailure, gate_margin, is_low_complexity, measure, measure_batch
from .evaluation import EvalReport, evaluate, render_overlay
from .maskio import BinaryMask, CheckPoint, NotCrackPixelError, Patch, extract_patch, load_mask, rotate_patch, save_mask
from .pca import OrientationEstimate, pca_slope
from .ransac import LineModel, NoConsensusError, RansacParams, ransac_fit
from .synth import SyntheticSpec, synth_crack
from .tilt import RotationParam, TiltConfig, TiltResult, extract_angle, pre_rotation_search, tilt_solve
from .width import WidthSample, mae, measure_width_at, mpa_cost, mse, sbm_width

__version__ = "0.1.0"

__all__ = [
    "BinaryMask", "CheckPoint", "Patch", "NotCrackPixelError", "load_mask", "save_mask",
    "extract_patch", "rotate_patch",
    "PointSet", "CenteredMatrix", "extract_boundary", "center_points",
    "OrientationEstimate", "pca_slope",
    "LineModel", "RansacParams", "NoConsensusError", "ransac_fit",
    "RotationParam", "TiltConfig", "TiltResult", "pre_rotation_search", "tilt_solve", "extract_angle",
    "WidthSample", "measure_width_at", "mpa_cost", "sbm_width", "mae", "mse",
    "CascadeConfig", "Measurement", "PointFailure", "gate_margin", "is_low_complexity", "measure", "measure_batch",
    "SyntheticSpec", "synth_crack", "EvalReport", "evaluate", "render_overlay",
]
