"""Beam-chain spline solver on compliant supports.

A chain of M straight segments (the control polygon) carries an
Euler-Bernoulli state vector Z = (W, theta, M, Q) per section:

    dW/dt = theta,  dtheta/dt = M,  dM/dt = Q,  dQ/dt = 0

with bending rigidity nondimensionalized to 1, so M has units 1/px and
Q units 1/px^2.  Per segment both end states are unknown (8M unknowns);
4M transfer equations, 4(M-1) joint conjugation equations and 4 boundary
equations close the system, which is banded (kl=5, ku=2) in per-segment
block ordering and solved by direct banded LU with partial pivoting.

Joint conditions between segment i and i+1: deflection and moment are
continuous, the rotation jumps by -psi_i (compensating the polygon's
misalignment angle) and the shear jump carries the spring support in
compliance form

    W_{i,1} = Pi_i - C_i (Q_{i+1,0} - Q_{i,1}),

so C_i = 0 encodes a rigid (interpolating) support.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .banded import BandedMatrix
from .errors import SingularSystem
from .geometry import ControlPolygon, SegmentFrames, build_frames, misalignment_angles

RESIDUAL_TOL = 1e-9


def transfer_matrix(t: float) -> np.ndarray:
    """Upper-triangular polynomial transfer matrix mapping Z(0) to Z(t)."""
    return np.array([
        [1.0, t, t * t / 2.0, t ** 3 / 6.0],
        [0.0, 1.0, t, t * t / 2.0],
        [0.0, 0.0, 1.0, t],
        [0.0, 0.0, 0.0, 1.0],
    ])


def transfer(state: np.ndarray, t: float) -> np.ndarray:
    """Propagate a state vector (W, theta, M, Q) a distance t along a segment."""
    return transfer_matrix(t) @ np.asarray(state, dtype=float)


@dataclass(frozen=True)
class SupportSpec:
    """Spring support at an interior joint: signed gap and compliance.

    ``compliance`` is 1/rigidity in px^4; zero means a rigid
    (interpolating) support.
    """

    gap: float
    compliance: float

    def __post_init__(self):
        if self.compliance < 0.0:
            raise ValueError("compliance must be >= 0")


class BoundaryCondition(enum.Enum):
    """End conditions of an open chain; both ends get W = 0 and M = 0."""

    PINNED_FREE = "pinned_free"


@dataclass
class SplineSolution:
    """Solved beam chain: per-segment end states plus geometry.

    ``z0[i]`` and ``z1[i]`` are the state vectors at the start and end of
    segment i; ``origins[i]`` is the segment's start point.
    """

    polygon: ControlPolygon
    frames: SegmentFrames
    z0: np.ndarray
    z1: np.ndarray
    residual: float

    @property
    def n_segments(self) -> int:
        return len(self.frames)

    @property
    def origins(self) -> np.ndarray:
        return self.polygon.points[:-1]


def assemble_and_solve(
    polygon: ControlPolygon,
    supports: Sequence[SupportSpec],
    bc: BoundaryCondition = BoundaryCondition.PINNED_FREE,
) -> SplineSolution:
    """Assemble and solve the 8M-unknown banded system of the beam chain.

    ``supports`` holds one :class:`SupportSpec` per interior joint
    (M - 1 entries for M segments).  Unknown ordering is per-segment
    blocks (Z_{i,0}, Z_{i,1}).
    """
    if bc is not BoundaryCondition.PINNED_FREE:
        raise ValueError(f"unsupported boundary condition {bc}")
    frames = build_frames(polygon)
    m = len(frames)
    if m >= 2:
        psi = misalignment_angles(frames)
    else:
        psi = np.zeros(0)
        frames.psi = psi
    if len(supports) != m - 1:
        raise ValueError(f"expected {m - 1} interior supports, got {len(supports)}")

    n = 8 * m
    kl, ku = 5, 2
    a = BandedMatrix(n, kl, ku)
    rhs = np.zeros(n)
    ab = a.ab
    diag = kl + ku
    lens = frames.lengths
    blocks = 8 * np.arange(m)

    def put(rows, cols, values):
        ab[diag + rows - cols, cols] = values

    # left boundary: W = 0, M = 0 at the start of segment 0
    a.set(0, 0, 1.0)
    a.set(1, 2, 1.0)

    # transfer rows, vectorized over segments: row base+2+q couples
    # Z_{i,0} through the polynomial matrix and subtracts Z_{i,1}
    t = lens
    poly = {
        (0, 0): np.ones(m), (0, 1): t, (0, 2): t * t / 2.0, (0, 3): t ** 3 / 6.0,
        (1, 1): np.ones(m), (1, 2): t, (1, 3): t * t / 2.0,
        (2, 2): np.ones(m), (2, 3): t,
        (3, 3): np.ones(m),
    }
    for (q, j), vals in poly.items():
        put(blocks + 2 + q, blocks + j, vals)
    for q in range(4):
        put(blocks + 2 + q, blocks + 4 + q, -np.ones(m))

    if m >= 2:
        jb = blocks[:-1]
        comp = np.array([s.compliance for s in supports])
        gaps = np.array([s.gap for s in supports])
        ones = np.ones(m - 1)
        put(jb + 6, jb + 8, ones)       # W continuity
        put(jb + 6, jb + 4, -ones)
        put(jb + 7, jb + 9, ones)       # theta jump of -psi
        put(jb + 7, jb + 5, -ones)
        rhs[jb + 7] = -psi
        put(jb + 8, jb + 10, ones)      # M continuity
        put(jb + 8, jb + 6, -ones)
        put(jb + 9, jb + 4, ones)       # spring support, compliance form
        put(jb + 9, jb + 11, comp)
        put(jb + 9, jb + 7, -comp)
        rhs[jb + 9] = gaps

    # right boundary: W = 0, M = 0 at the end of the last segment
    a.set(n - 2, 8 * (m - 1) + 4, 1.0)
    a.set(n - 1, 8 * (m - 1) + 6, 1.0)

    x = a.solve(rhs)
    residual = float(np.max(np.abs(a.matvec(x) - rhs)))
    # guard against garbage from degenerate geometry; the scale covers
    # legitimately large compliance coefficients and solution components
    scale = max(1.0, float(np.max(np.abs(x))),
                max((s.compliance for s in supports), default=1.0))
    if not np.isfinite(residual) or residual > 1e3 * RESIDUAL_TOL * scale:
        raise SingularSystem(
            f"residual {residual:.3e} exceeds tolerance; degenerate geometry")

    z = x.reshape(m, 8)
    return SplineSolution(
        polygon=polygon,
        frames=frames,
        z0=z[:, :4].copy(),
        z1=z[:, 4:].copy(),
        residual=residual,
    )


def _states_at(solution: SplineSolution, seg: np.ndarray, t: np.ndarray) -> np.ndarray:
    """State vectors at parameters ``t`` on segments ``seg`` (vectorized)."""
    z0 = solution.z0[seg]
    w0, th0, m0, q0 = z0[..., 0], z0[..., 1], z0[..., 2], z0[..., 3]
    w = w0 + th0 * t + m0 * t * t / 2.0 + q0 * t ** 3 / 6.0
    th = th0 + m0 * t + q0 * t * t / 2.0
    mm = m0 + q0 * t
    qq = np.broadcast_to(q0, np.shape(t)).copy() if np.ndim(t) else q0
    return np.stack([w, th, mm, qq], axis=-1)


def evaluate(solution: SplineSolution, segment: int, t: float) -> np.ndarray:
    """Point on the spline at local parameter t of one segment.

    The deflection W rides on the deformed normal (the frame normal
    rotated by the local angle theta), which keeps the evaluated curve
    continuous across joints.
    """
    m = solution.n_segments
    if not 0 <= segment < m:
        raise IndexError(f"segment {segment} out of range [0, {m})")
    return evaluate_many(solution, np.array([segment]), np.array([float(t)]))[0]


def evaluate_many(solution: SplineSolution, seg: np.ndarray, t: np.ndarray) -> np.ndarray:
    seg = np.asarray(seg, dtype=int)
    t = np.asarray(t, dtype=float)
    z = _states_at(solution, seg, t)
    w, th = z[..., 0], z[..., 1]
    tu = solution.frames.tangents[seg]
    nu = solution.frames.normals[seg]
    origins = solution.origins[seg]
    n_rot = nu * np.cos(th)[..., None] - tu * np.sin(th)[..., None]
    return origins + tu * t[..., None] + n_rot * w[..., None]


@dataclass(frozen=True)
class CurvatureProfile:
    """Signed curvature on a uniform arc-length grid for one side."""

    length: float
    s: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        if len(self.s) < 64:
            raise ValueError("curvature profile needs at least 64 samples")
        ds = np.diff(self.s)
        if np.any(ds <= 0):
            raise ValueError("arc-length grid must be strictly increasing")

    @property
    def n(self) -> int:
        return len(self.s)


def _local_derivatives(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Analytic first/second derivatives of the in-frame components.

    With T(t) = t - W sin(theta) and N(t) = W cos(theta) along the
    segment tangent/normal, the chain dW = theta, dtheta = M, dM = Q
    gives closed forms for T', N', T'', N''.
    """
    w, th, m, q = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    sin_t, cos_t = np.sin(th), np.cos(th)
    dT = 1.0 - th * sin_t - w * m * cos_t
    dN = th * cos_t - w * m * sin_t
    ddT = -m * sin_t - 2.0 * th * m * cos_t - w * q * cos_t + w * m * m * sin_t
    ddN = m * cos_t - 2.0 * th * m * sin_t - w * q * sin_t - w * m * m * cos_t
    return dT, dN, ddT, ddN


def curvature_profile(
    solution: SplineSolution,
    samples_per_segment: int = 16,
    n_samples: int = 1024,
) -> CurvatureProfile:
    """Arc length and signed curvature of the solved spline.

    Arc length is accumulated by composite Simpson quadrature on the
    per-segment parameter grid; curvature comes from the analytic
    derivatives of the in-frame components (no numerical
    differentiation).  The profile is resampled onto ``n_samples``
    uniform arc-length points by monotone linear interpolation.
    """
    m = solution.n_segments
    spp = int(samples_per_segment)
    if spp < 2:
        raise ValueError("samples_per_segment must be >= 2")

    # grid with midpoints: 2*spp + 1 parameters per segment
    n_fine = 2 * spp + 1
    frac = np.linspace(0.0, 1.0, n_fine)
    seg_idx = np.repeat(np.arange(m)[:, None], n_fine, axis=1)
    t_grid = solution.frames.lengths[:, None] * frac[None, :]

    z = _states_at(solution, seg_idx, t_grid)
    dT, dN, ddT, ddN = _local_derivatives(z)
    speed = np.hypot(dT, dN)
    kappa = (dT * ddN - dN * ddT) / speed ** 3

    # Simpson on each (2j, 2j+1, 2j+2) triplet
    h = t_grid[:, 2] - t_grid[:, 0]  # double step per segment
    sub = (h[:, None] / 6.0) * (speed[:, 0:-1:2] + 4.0 * speed[:, 1::2] + speed[:, 2::2])
    s_seg = np.concatenate([np.zeros((m, 1)), np.cumsum(sub, axis=1)], axis=1)
    seg_lengths = s_seg[:, -1]
    seg_offsets = np.concatenate([[0.0], np.cumsum(seg_lengths)[:-1]])

    # arc coordinate at the even grid points (the sub-interval endpoints)
    s_even = seg_offsets[:, None] + s_seg
    kappa_even = kappa[:, ::2]

    s_flat = s_even.ravel()
    k_flat = kappa_even.ravel()
    keep = np.concatenate([[True], np.diff(s_flat) > 0.0])
    s_flat = s_flat[keep]
    k_flat = k_flat[keep]

    total = float(s_flat[-1])
    s_uniform = np.linspace(0.0, total, int(n_samples))
    kappa_uniform = np.interp(s_uniform, s_flat, k_flat)
    return CurvatureProfile(length=total, s=s_uniform, kappa=kappa_uniform)
