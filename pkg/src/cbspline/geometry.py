"""Points, polygons, per-segment local frames, misalignment angles, signed gaps.

Conventions used throughout the package:

* points are float arrays of shape (n, 2), coordinates in pixels;
* piece outlines are traversed clockwise, meaning the shoelace signed area
  ``sum(x_i * y_{i+1} - x_{i+1} * y_i) / 2`` is negative;
* the segment normal is the tangent rotated by -pi/2, so a convex region
  boundary traversed clockwise has positive curvature;
* angles are radians, misalignment ``psi`` is positive clockwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroLengthSegment


def as_points(points) -> np.ndarray:
    """Coerce input to a float (n, 2) array and validate finiteness."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1 and pts.size == 2:
        pts = pts.reshape(1, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected (n, 2) point array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("point coordinates must be finite")
    return pts


def dedup_consecutive(points: np.ndarray, closed: bool = False) -> np.ndarray:
    """Drop consecutive duplicate points; for closed contours also the seam."""
    pts = as_points(points)
    if len(pts) <= 1:
        return pts
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    pts = pts[keep]
    if closed and len(pts) > 1 and np.all(pts[0] == pts[-1]):
        pts = pts[:-1]
    return pts


def signed_area(points: np.ndarray) -> float:
    """Shoelace signed area of a closed polygon."""
    pts = as_points(points)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def is_clockwise(points: np.ndarray) -> bool:
    return signed_area(points) < 0.0


@dataclass(frozen=True)
class ContourSamples:
    """Ordered measured boundary points (the fixed input set).

    ``points`` is (n, 2); consecutive duplicates are collapsed on
    construction because zero-length segments have no local frame.
    """

    points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        pts = dedup_consecutive(self.points, closed=self.closed)
        if len(pts) < 2:
            raise ValueError("a contour needs at least 2 distinct points")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class ControlPolygon:
    """Trial contour polygon; one fewer segment than points."""

    points: np.ndarray

    def __post_init__(self):
        pts = as_points(self.points)
        if len(pts) < 2:
            raise ValueError("a polygon needs at least 2 points")
        if np.any(np.all(pts[1:] == pts[:-1], axis=1)):
            raise ZeroLengthSegment("consecutive control points coincide")
        object.__setattr__(self, "points", pts)

    @property
    def n_segments(self) -> int:
        return len(self.points) - 1


@dataclass
class SegmentFrames:
    """Per-segment local frames of a control polygon, stored vectorized.

    lengths[i] is the segment length, tangents[i] the unit tangent
    ``(a, b)``, normals[i] the unit normal ``(c, d) = (b, -a)`` (tangent
    rotated by -pi/2).  ``psi`` holds the misalignment angle to the next
    segment and is absent (None) until :func:`misalignment_angles` runs.
    """

    lengths: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    psi: np.ndarray | None = field(default=None)

    def __len__(self) -> int:
        return len(self.lengths)


def build_frames(polygon: ControlPolygon) -> SegmentFrames:
    """Local frame of every polygon segment.

    Raises :class:`ZeroLengthSegment` if consecutive points coincide.
    """
    pts = polygon.points
    vec = pts[1:] - pts[:-1]
    lengths = np.hypot(vec[:, 0], vec[:, 1])
    if np.any(lengths == 0.0):
        raise ZeroLengthSegment("zero-length polygon segment")
    tangents = vec / lengths[:, None]
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]])
    return SegmentFrames(lengths=lengths, tangents=tangents, normals=normals)


def misalignment_angles(frames: SegmentFrames) -> np.ndarray:
    """Misalignment angle psi_i between segment i and segment i+1.

    Recovered from the (cos, sin) pair of inner products so the quadrant
    is unambiguous; psi lies in (-pi, pi], positive clockwise.
    """
    if len(frames) < 2:
        raise ValueError("need at least 2 frames for misalignment angles")
    t0 = frames.tangents[:-1]
    t1 = frames.tangents[1:]
    n0 = frames.normals[:-1]
    cos_psi = np.sum(t0 * t1, axis=1)
    sin_psi = np.sum(n0 * t1, axis=1)
    psi = np.arctan2(sin_psi, cos_psi)
    frames.psi = psi
    return psi


def signed_gap(a: np.ndarray, normal: np.ndarray, b: np.ndarray) -> float:
    """Signed distance from contour point ``a`` to measured point ``b``.

    Positive when the a->b vector forms an acute angle with the segment
    normal.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.dot(b - a, np.asarray(normal, dtype=float)))


def signed_gaps(a: np.ndarray, normals: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized :func:`signed_gap` over matching rows."""
    return np.sum((np.asarray(b, float) - np.asarray(a, float))
                  * np.asarray(normals, float), axis=1)
