"""Corotational beam-chain splines for contour smoothing and curvature matching."""

from .beam import (
    BoundaryCondition,
    CurvatureProfile,
    SplineSolution,
    SupportSpec,
    assemble_and_solve,
    curvature_profile,
    evaluate,
    transfer,
)
from .geometry import (
    ContourSamples,
    ControlPolygon,
    SegmentFrames,
    build_frames,
    misalignment_angles,
    signed_gap,
)
from .rigidity import SmoothingParams, rigidity, support_lengths, suppression

__all__ = [
    "BoundaryCondition",
    "ContourSamples",
    "ControlPolygon",
    "CurvatureProfile",
    "SegmentFrames",
    "SmoothingParams",
    "SplineSolution",
    "SupportSpec",
    "assemble_and_solve",
    "build_frames",
    "curvature_profile",
    "evaluate",
    "misalignment_angles",
    "rigidity",
    "signed_gap",
    "support_lengths",
    "suppression",
    "transfer",
]
