"""From a binary mask (or point list) to four smoothed sides per piece.

Pipeline stages: boundary tracing, corner detection, side splitting,
silhouette initialization, and the iterative solve / project / renumber
loop that shrinks the smoothing length h until h_final.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beam import (
    CurvatureProfile,
    SplineSolution,
    SupportSpec,
    assemble_and_solve,
    curvature_profile,
    evaluate_many,
)
from .errors import CornersNotFound, EmptyMask, MultipleComponents, StrideTooCoarse
from .geometry import (
    ContourSamples,
    ControlPolygon,
    build_frames,
    is_clockwise,
    misalignment_angles,
    signed_gaps,
)
from .rigidity import SmoothingParams, support_lengths

CANDIDATES_PER_SEGMENT = 200

# Moore neighborhood in clockwise screen order starting west
_RING = np.array([(0, -1), (-1, -1), (-1, 0), (-1, 1),
                  (0, 1), (1, 1), (1, 0), (1, -1)])


@dataclass(frozen=True)
class RasterMask:
    """Row-major boolean grid; True marks the piece."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 2:
            raise ValueError("mask must be a 2-d grid")
        object.__setattr__(self, "bits", bits)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


def _flood_count(bits: np.ndarray, seed: tuple[int, int]) -> int:
    """Number of foreground pixels 8-connected to the seed."""
    visited = np.zeros_like(bits, dtype=bool)
    visited[seed] = True
    frontier = np.array([seed])
    h, w = bits.shape
    count = 1
    while len(frontier):
        nxt = frontier[:, None, :] + _RING[None, :, :]
        nxt = nxt.reshape(-1, 2)
        ok = (
            (nxt[:, 0] >= 0) & (nxt[:, 0] < h)
            & (nxt[:, 1] >= 0) & (nxt[:, 1] < w)
        )
        nxt = nxt[ok]
        ok = bits[nxt[:, 0], nxt[:, 1]] & ~visited[nxt[:, 0], nxt[:, 1]]
        nxt = nxt[ok]
        if len(nxt) == 0:
            break
        # deduplicate
        flat = nxt[:, 0] * w + nxt[:, 1]
        uniq = np.unique(flat)
        nxt = np.column_stack([uniq // w, uniq % w])
        visited[nxt[:, 0], nxt[:, 1]] = True
        count += len(nxt)
        frontier = nxt
    return count


def trace_boundary(mask: RasterMask) -> ContourSamples:
    """Closed clockwise 8-connected boundary pixel sequence of the piece.

    Every returned pixel is foreground with at least one background
    4-neighbor.  Raises :class:`EmptyMask` / :class:`MultipleComponents`
    on invalid masks.
    """
    bits = mask.bits
    fg = np.argwhere(bits)
    if len(fg) == 0:
        raise EmptyMask("mask has no foreground pixels")
    if (
        bits[0, :].any() or bits[-1, :].any()
        or bits[:, 0].any() or bits[:, -1].any()
    ):
        raise ValueError("foreground touches the mask border")
    start = tuple(fg[0])  # row-major scan: topmost, then leftmost
    if _flood_count(bits, start) != len(fg):
        raise MultipleComponents("mask has more than one 8-connected component")

    if len(fg) == 1:
        pts = np.array([[start[1], start[0]]], dtype=float)
        return _raw_contour(pts)

    ring_index = {(int(d[0]), int(d[1])): i for i, d in enumerate(_RING)}
    # walk states are (pixel, backtrack ring index); the walk is a
    # deterministic map, so the boundary cycle is the orbit between the
    # first repeated state
    cur = start
    back = 0  # west of the start pixel is background by scan order
    seen: dict[tuple[tuple[int, int], int], int] = {}
    seq: list[tuple[int, int]] = []
    guard = 8 * len(fg) + 16
    cycle_start = 0
    for _ in range(guard):
        state = (cur, back)
        if state in seen:
            cycle_start = seen[state]
            break
        seen[state] = len(seq)
        seq.append(cur)
        k_found = None
        for k in range(1, 9):
            idx = (back + k) % 8
            r = cur[0] + int(_RING[idx, 0])
            c = cur[1] + int(_RING[idx, 1])
            if bits[r, c]:
                k_found = k
                nxt = (r, c)
                break
        if k_found is None:
            break  # defensive; single pixels are handled above
        prev_ring = (back + k_found - 1) % 8
        bg = (cur[0] + int(_RING[prev_ring, 0]), cur[1] + int(_RING[prev_ring, 1]))
        back = ring_index[(bg[0] - nxt[0], bg[1] - nxt[1])]
        cur = nxt
    seq = seq[cycle_start:]

    pts = np.array([[c, r] for r, c in seq], dtype=float)
    if len(pts) >= 3 and not is_clockwise(pts):
        pts = np.vstack([pts[:1], pts[1:][::-1]])
    return _raw_contour(pts)


def _raw_contour(pts: np.ndarray) -> ContourSamples:
    """ContourSamples allowing a degenerate single-pixel closed contour."""
    if len(pts) >= 2:
        return ContourSamples(pts, closed=True)
    obj = ContourSamples.__new__(ContourSamples)
    object.__setattr__(obj, "points", pts)
    object.__setattr__(obj, "closed", True)
    return obj


@dataclass(frozen=True)
class PieceContour:
    """Closed piece outline split at its four corners."""

    samples: ContourSamples
    corner_indices: np.ndarray
    sides: tuple[ContourSamples, ...]


def _arc_point(pts: np.ndarray, cum: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Points at arc positions s (mod perimeter) on a closed polyline."""
    perim = cum[-1]
    s = np.mod(s, perim)
    x = np.interp(s, cum, np.concatenate([pts[:, 0], pts[:1, 0]]))
    y = np.interp(s, cum, np.concatenate([pts[:, 1], pts[:1, 1]]))
    return np.column_stack([x, y])


def _angle_between(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Signed turn from u to v, positive clockwise (matching psi)."""
    cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    dot = u[:, 0] * v[:, 0] + u[:, 1] * v[:, 1]
    return np.arctan2(-cross, dot)


def _smooth_closed(pts: np.ndarray, half_width: int = 3) -> np.ndarray:
    """Circular moving average of a closed polyline; indices preserved."""
    n = len(pts)
    k = 2 * half_width + 1
    idx = (np.arange(n)[:, None] + np.arange(-half_width, half_width + 1)[None, :]) % n
    return pts[idx].mean(axis=1)


def _line_intersection(c1: np.ndarray, d1: np.ndarray,
                       c2: np.ndarray, d2: np.ndarray) -> np.ndarray | None:
    """Intersection of two lines given by point + direction; None when
    nearly parallel."""
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(cross) < 0.25:
        return None
    rhs = c2 - c1
    t1 = (rhs[0] * d2[1] - rhs[1] * d2[0]) / cross
    return c1 + t1 * d1


def _fit_direction(p: np.ndarray) -> tuple[np.ndarray, float]:
    """Principal direction of a point cloud (oriented along its span)
    and the RMS perpendicular residual of the line fit."""
    c = p.mean(axis=0)
    _, sv, vt = np.linalg.svd(p - c)
    d = vt[0]
    span = p[-1] - p[0]
    if float(np.dot(d, span)) < 0:
        d = -d
    rms = sv[1] / np.sqrt(len(p)) if len(sv) > 1 else 0.0
    return d, float(rms)


def detect_corners(
    samples: ContourSamples,
    window: float = 5.0,
    flank: float = 24.0,
    flank_rms_max: float = 1.3,
    angle_tol_deg: float = 35.0,
    return_points: bool = False,
) -> np.ndarray:
    """Indices of the four corner points of a closed piece outline.

    A corner shows a strong turn within ±``window`` px of arc, two
    straight ``flank``-px stretches beyond the window (line fits leave
    under ``flank_rms_max`` px RMS residual; tab fillets bend visibly
    over 15 px), flank lines meeting at nearly 90 degrees close to the
    point itself, and the chosen four must split the outline like a
    quadrilateral.  Detection runs on a lightly smoothed copy of the
    contour and the final indices snap back to boundary pixels.  Raises
    :class:`CornersNotFound` when no consistent corner set exists.
    """
    if not samples.closed:
        raise ValueError("corner detection expects a closed contour")
    raw = samples.points
    n = len(raw)
    if n < 200:
        raise ValueError("corner detection expects >= 200 contour points")
    pts = _smooth_closed(raw)

    seg = np.diff(np.vstack([pts, pts[:1]]), axis=0)
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])
    s_i = cum[:-1]

    p_m = _arc_point(pts, cum, s_i - window)
    p_p = _arc_point(pts, cum, s_i + window)
    turn = _angle_between(pts - p_m, p_p - pts)

    # rough peaks: gate on the local turn, which locates the corner
    # (smoothing blurs its magnitude, so this stays well below 90)
    rough = np.where(turn > np.deg2rad(22.0))[0]

    # qualification on the flanks: the two 15-px stretches beyond the
    # turning window must be straight lines meeting at nearly 90 degrees
    corner_tol = np.deg2rad(angle_tol_deg)
    candidates = []
    score_map = {}
    long_flank = max(flank, 38.0)
    for i in rough:
        s = s_i[i]
        fwd_pts = _arc_point(pts, cum, np.linspace(s + window, s + window + flank, 16))
        bwd_pts = _arc_point(pts, cum, np.linspace(s - window - flank, s - window, 16))
        d_out, r_fwd = _fit_direction(fwd_pts)
        d_in, r_bwd = _fit_direction(bwd_pts)
        if r_fwd >= flank_rms_max or r_bwd >= flank_rms_max:
            continue
        # extended flanks: a sharp tab-neck fillet can fake the short
        # windows, but then one long flank lies on the tab head arc and
        # bends far beyond what noise does to a straight stretch
        _, r_fwd_long = _fit_direction(
            _arc_point(pts, cum, np.linspace(s + window, s + window + long_flank, 32)))
        _, r_bwd_long = _fit_direction(
            _arc_point(pts, cum, np.linspace(s - window - long_flank, s - window, 32)))
        if r_fwd_long >= 1.8 or r_bwd_long >= 1.8:
            continue
        corner_turn = float(_angle_between(d_in[None, :], d_out[None, :])[0])
        dev = abs(corner_turn - np.pi / 2.0)
        if dev >= corner_tol:
            continue
        # distance from the candidate to the flank-line intersection: a
        # true corner sits on it, a rounded tab fillet several px away
        meet = _line_intersection(bwd_pts.mean(axis=0), d_in,
                                  fwd_pts.mean(axis=0), d_out)
        if meet is None:
            continue
        dist = float(np.hypot(*(meet - pts[i])))
        if dist > 9.0:
            continue
        candidates.append(i)
        score_map[i] = dev + np.deg2rad(2.0) * max(0.0, dist - 3.0)
    candidates = np.asarray(candidates, dtype=int)
    if len(candidates) < 4:
        raise CornersNotFound(f"only {len(candidates)} corner candidates qualified")

    perim = cum[-1]
    # collapse plateau candidates (quantization spreads one corner over a
    # few pixels): keep the best-scored candidate per 8-px arc cluster
    order = candidates[np.argsort(s_i[candidates])]
    clusters: list[list[int]] = [[int(order[0])]]
    for i in order[1:]:
        if s_i[i] - s_i[clusters[-1][-1]] <= 8.0:
            clusters[-1].append(int(i))
        else:
            clusters.append([int(i)])
    if len(clusters) > 1 and (perim - s_i[clusters[-1][-1]]) + s_i[clusters[0][0]] <= 8.0:
        clusters[0] = clusters.pop() + clusters[0]
    reps = [min(cl, key=lambda i: score_map[i]) for cl in clusters]
    if len(reps) < 4:
        raise CornersNotFound("fewer than 4 distinct corner candidates")
    if len(reps) > 24:  # cap the exhaustive quad search
        reps = sorted(sorted(reps, key=lambda i: score_map[i])[:24], key=lambda i: s_i[i])

    # quadrilateral-consistent selection: the four corners split the
    # outline into sides of comparable arc length, so every cyclic gap
    # must be a reasonable fraction of the perimeter
    reps = sorted(reps, key=lambda i: s_i[i])
    best_quad = None
    from itertools import combinations

    for quad in combinations(range(len(reps)), 4):
        ss = [s_i[reps[q]] for q in quad]
        gaps = [ss[(k + 1) % 4] - ss[k] if k < 3 else perim - ss[3] + ss[0]
                for k in range(4)]
        if min(gaps) < 0.15 * perim or max(gaps) > 0.42 * perim:
            continue
        # a piece is a quasi-parallelogram: opposite corner-to-corner
        # chords match, and a fake corner partway down a side skews them
        # badly; arc length cannot play this role because tabs lengthen
        # the arc of their side
        quad_pts = pts[[reps[q] for q in quad]]
        chords = np.hypot(*(np.roll(quad_pts, -1, axis=0) - quad_pts).T)
        imbalance = abs(chords[0] - chords[2]) + abs(chords[1] - chords[3])
        total = sum(score_map[reps[q]] for q in quad) + np.deg2rad(1.0) * imbalance
        if best_quad is None or total < best_quad[0]:
            best_quad = (total, quad)
    if best_quad is None:
        raise CornersNotFound("no quadrilateral-consistent corner set")
    chosen = [reps[q] for q in best_quad[1]]
    refined = [_refine_corner(pts, cum, s_i[i], i, window, flank) for i in chosen]
    refined.sort(key=lambda pair: pair[0])
    indices = np.array([pair[0] for pair in refined])
    if return_points:
        return indices, np.array([pair[1] for pair in refined])
    return indices


def _refine_corner(pts: np.ndarray, cum: np.ndarray, s_c: float, idx: int,
                   window: float, flank: float) -> tuple[int, np.ndarray]:
    """Corner estimate from the intersection of lines fit to the two
    flanking stretches, plus the boundary pixel index nearest to it.

    Staircase quantization and boundary noise displace the raw turning
    peak by a few pixels; the flank-line intersection localizes the
    physical corner much more consistently, which matters because both
    pieces of a mating edge must measure the same corner.
    """
    n = len(pts)
    perim = cum[-1]

    def flank_points(lo, hi):
        ss = np.linspace(lo, hi, 20)
        return _arc_point(pts, cum, ss)

    p_fwd = flank_points(s_c + window, s_c + window + flank)
    p_bwd = flank_points(s_c - window - flank, s_c - window)
    c1, d1 = p_bwd.mean(axis=0), _fit_direction(p_bwd)[0]
    c2, d2 = p_fwd.mean(axis=0), _fit_direction(p_fwd)[0]
    corner = _line_intersection(c1, d1, c2, d2)
    if corner is None:  # flanks nearly parallel; keep the raw pick
        return idx, pts[idx].copy()
    # nearest contour point within the turning window
    lo_idx = np.searchsorted(cum, (s_c - window - 2.0) % perim)
    hi_idx = np.searchsorted(cum, (s_c + window + 2.0) % perim)
    if lo_idx <= hi_idx:
        cand = np.arange(lo_idx, min(hi_idx + 1, n))
    else:
        cand = np.concatenate([np.arange(lo_idx, n), np.arange(0, hi_idx + 1)])
    if len(cand) == 0:
        return idx, pts[idx].copy()
    d2s = np.sum((pts[cand] - corner) ** 2, axis=1)
    return int(cand[np.argmin(d2s)]), corner


def _arc_dist(a: float, b: float, perimeter: float) -> float:
    d = abs(a - b) % perimeter
    return min(d, perimeter - d)


def split_sides(samples: ContourSamples, corners: np.ndarray,
                corner_points: np.ndarray | None = None) -> tuple[ContourSamples, ...]:
    """Split a closed contour into 4 open sides at the corner indices.

    With ``corner_points`` given, each side starts and ends at the
    estimated corner coordinates instead of the nearest boundary pixel,
    so both pieces sharing a cut measure the same physical corner.
    """
    pts = samples.points
    sides = []
    for j in range(4):
        a, b = corners[j], corners[(j + 1) % 4]
        if b > a:
            side = pts[a:b + 1]
        else:
            side = np.vstack([pts[a:], pts[:b + 1]])
        if corner_points is not None:
            side = np.vstack([corner_points[j], side, corner_points[(j + 1) % 4]])
        sides.append(ContourSamples(side, closed=False))
    return tuple(sides)


def build_piece_contour(samples: ContourSamples) -> PieceContour:
    corners, corner_points = detect_corners(samples, return_points=True)
    return PieceContour(samples=samples, corner_indices=corners,
                        sides=split_sides(samples, corners, corner_points))


@dataclass
class RefinementState:
    """State of the iterative side refinement.

    ``b_points`` holds all measured points of one side in their current
    order; ``b_order`` maps each row back to the original side index.
    ``a_points`` are the matching support points on the trial contour,
    NaN where a point does not carry a support yet (pre-first-projection
    the silhouette picks are the only supports).  ``b_seg`` remembers the
    trial-contour segment of the last projection per point.
    """

    iteration: int
    h: float
    b_points: np.ndarray
    b_order: np.ndarray
    b_seg: np.ndarray
    a_points: np.ndarray
    gaps: np.ndarray
    support_mask: np.ndarray


def init_silhouette(side: ContourSamples, stride: int) -> RefinementState:
    """First trial polygon: every Kth point plus both end corners.

    Misalignment angles of the initial polygon must stay below pi/2;
    where violated the stride is halved locally.  Raises
    :class:`StrideTooCoarse` when halving reaches stride 1 without
    satisfying the bound (or the side is shorter than 2K points).
    """
    pts = side.points
    n = len(pts)
    k = int(stride)
    if n <= 2 * k:
        raise StrideTooCoarse(f"side has {n} points, need more than {2 * k}")

    def dedupe_positions(indices: list[int]) -> list[int]:
        # a traced boundary may revisit a pixel across 1-px bridges, so
        # two picks can coincide; a polygon needs distinct joints
        kept = [indices[0]]
        for i in indices[1:]:
            if not np.array_equal(pts[i], pts[kept[-1]]):
                kept.append(i)
        return kept

    idx = dedupe_positions(sorted(set(range(0, n - 1, k)) | {n - 1}))
    seen: set[tuple[int, ...]] = set()
    banned: set[int] = set()
    for _ in range(512):
        poly_pts = pts[idx]
        frames = build_frames(ControlPolygon(poly_pts))
        if len(frames) < 2:
            break
        psi = misalignment_angles(frames)
        bad = np.where(np.abs(psi) >= np.pi / 2.0)[0]
        if len(bad) == 0:
            break
        new_idx = set(idx)
        changed = False
        for j in bad:
            left, mid, right = idx[j], idx[j + 1], idx[j + 2]
            for cand in ((left + mid) // 2, (mid + right) // 2):
                if cand not in banned and cand not in new_idx:
                    new_idx.add(cand)
                    changed = True
            if mid - left == 1 and right - mid == 1 and len(new_idx) > 3:
                # a lone sample forming an irreducible >=90-degree kink is
                # measurement noise, not geometry; it cannot anchor the
                # initial polygon
                new_idx.discard(mid)
                changed = True
        key = tuple(sorted(new_idx))
        if not changed or key in seen:
            # insert/drop cycle around a noise knot: ban the worst
            # violator outright; the ban set only grows, so this ends
            worst = idx[int(bad[np.argmax(np.abs(psi[bad]))]) + 1]
            new_idx = set(idx)
            if len(new_idx) > 3 and worst not in (0, n - 1):
                new_idx.discard(worst)
                banned.add(worst)
            else:
                raise StrideTooCoarse("misalignment bound unreachable at stride 1")
            key = tuple(sorted(new_idx))
        seen.add(key)
        idx = dedupe_positions(sorted(new_idx))
        if len(idx) < 3:
            raise StrideTooCoarse("side degenerates to fewer than 3 distinct picks")
    else:
        raise StrideTooCoarse("misalignment bound not reached while refining stride")

    a_points = np.full((n, 2), np.nan)
    support_mask = np.zeros(n, dtype=bool)
    for i in idx:
        a_points[i] = pts[i]
        support_mask[i] = True
    # silhouette segment containing each point
    seg_of = np.searchsorted(np.asarray(idx), np.arange(n), side="right") - 1
    seg_of = np.clip(seg_of, 0, len(idx) - 2)
    return RefinementState(
        iteration=0,
        h=float(k),
        b_points=pts.copy(),
        b_order=np.arange(n),
        b_seg=seg_of,
        a_points=a_points,
        gaps=np.zeros(n),
        support_mask=support_mask,
    )


def solver_inputs(state: RefinementState, h: float) -> tuple[ControlPolygon, list[SupportSpec], np.ndarray]:
    """Control polygon and merged per-joint supports for one solve.

    Support points sharing a location merge into one joint whose rigidity
    is the sum and whose gap is the rigidity-weighted mean, so duplicate
    projections behave like one support covering their combined length.
    Returns (polygon, supports, joint_of_support_point).
    """
    sup_idx = np.where(state.support_mask)[0]
    a = state.a_points[sup_idx]
    gaps = state.gaps[sup_idx]

    # joints: consecutive support locations merge when closer than a
    # hair; sub-candidate-spacing segments only make the system floppy
    step = np.hypot(*np.diff(a, axis=0).T)
    same = np.concatenate([[False], step < 0.05])
    joint_of = np.cumsum(~same) - 1
    joints = a[~same]
    if len(joints) < 2:
        raise StrideTooCoarse("degenerate trial polygon")

    chord = np.hypot(*np.diff(a, axis=0).T)
    lengths = support_lengths(chord)
    d_point = lengths / h ** 4

    n_joints = len(joints)
    d_joint = np.zeros(n_joints)
    dpi_joint = np.zeros(n_joints)
    np.add.at(d_joint, joint_of, d_point)
    np.add.at(dpi_joint, joint_of, d_point * gaps)

    supports = []
    for j in range(1, n_joints - 1):
        dj = d_joint[j]
        if dj <= 0.0:
            raise StrideTooCoarse("interior joint with zero support length")
        supports.append(SupportSpec(dpi_joint[j] / dj, 1.0 / dj))
    return ControlPolygon(joints), supports, joint_of


def project_and_renumber(
    state: RefinementState,
    solution: SplineSolution,
    all_b: ContourSamples,
) -> RefinementState:
    """Project every measured point onto the solved spline and renumber.

    200 equidistant candidate points per trial-contour segment are
    searched, restricted to the 3 segments nearest each point's previous
    projection (clamped at the side ends).  Points are then re-ordered by
    the arc coordinate of their projections (stable in the prior order)
    and the signed gaps are recomputed against the new polygon frames.
    """
    del all_b  # the state already carries every measured point
    m = solution.n_segments
    # candidate density: the spec rate of 200 per silhouette-scale
    # (20 px) segment, i.e. 0.1 px spacing, capped at 200 per segment
    per_seg = np.clip(np.ceil(solution.frames.lengths / 0.1).astype(int),
                      4, CANDIDATES_PER_SEGMENT)
    offsets = np.concatenate([[0], np.cumsum(per_seg)])
    seg_cand = np.repeat(np.arange(m), per_seg)
    within = np.arange(offsets[-1]) - offsets[seg_cand]
    frac = (within + 0.5) / per_seg[seg_cand]
    t_cand = solution.frames.lengths[seg_cand] * frac
    cand = evaluate_many(solution, seg_cand, t_cand)

    n = len(state.b_points)
    b = state.b_points
    best_flat = np.empty(n, dtype=int)

    seg_prev = np.clip(state.b_seg, 0, m - 1)
    lo = offsets[np.clip(seg_prev - 1, 0, m - 1)]
    hi = offsets[np.clip(seg_prev + 1, 0, m - 1) + 1]
    # group interior points by identical window for vectorized search
    interior = np.arange(1, n - 1)
    windows: dict[tuple[int, int], list[int]] = {}
    for i in interior:
        windows.setdefault((int(lo[i]), int(hi[i])), []).append(i)
    for (wlo, whi), idxs in windows.items():
        idxs = np.array(idxs)
        d2 = ((b[idxs, None, :] - cand[None, wlo:whi, :]) ** 2).sum(axis=2)
        best_flat[idxs] = wlo + np.argmin(d2, axis=1)

    order_key = best_flat[interior]
    perm = interior[np.argsort(order_key, kind="stable")]
    new_order = np.concatenate([[0], perm, [n - 1]])

    new_b = b[new_order]
    new_b_order = state.b_order[new_order]
    new_a = np.empty_like(new_b)
    new_a[0] = b[0]
    new_a[-1] = b[-1]
    new_a[1:-1] = cand[best_flat[perm]]

    # joint index of each point in the new polygon: corners plus distinct
    # interior projections in order (hairline-close ones count as one)
    step = np.hypot(*np.diff(new_a, axis=0).T)
    same = np.concatenate([[False], step < 0.05])
    joint_of = np.cumsum(~same) - 1
    n_joints = joint_of[-1] + 1

    # segment hint for the next projection round: the polygon segment
    # entering this point's joint, clamped to the new segment range
    new_b_seg = np.clip(joint_of - 1, 0, max(n_joints - 2, 0))

    # gaps against the new polygon frames: use the frame of the segment
    # ending at the point's joint
    joints = new_a[~same]
    frames = build_frames(ControlPolygon(joints))
    seg_in = np.clip(joint_of - 1, 0, len(frames) - 1)
    gaps = signed_gaps(new_a, frames.normals[seg_in], new_b)
    gaps[0] = 0.0
    gaps[-1] = 0.0

    return RefinementState(
        iteration=state.iteration + 1,
        h=state.h,
        b_points=new_b,
        b_order=new_b_order,
        b_seg=new_b_seg,
        a_points=new_a,
        gaps=gaps,
        support_mask=np.ones(n, dtype=bool),
    )


def refine_side(
    side: ContourSamples,
    params: SmoothingParams,
) -> tuple[SplineSolution, CurvatureProfile]:
    """Full side refinement: silhouette init, then solve / project /
    shrink h until the schedule ends; corners stay pinned throughout."""
    state = init_silhouette(side, params.stride)
    schedule = params.schedule()
    state.h = schedule[0]
    solution = None
    for step, h in enumerate(schedule):
        state.h = h
        polygon, supports, _ = solver_inputs(state, h)
        solution = assemble_and_solve(polygon, supports)
        if step == len(schedule) - 1:
            break
        state = project_and_renumber(state, solution, side)
    profile = curvature_profile(solution)
    return solution, profile


def _dense_curve(solution: SplineSolution, pts_per_seg: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Spline polyline with cumulative chord arc, for geometric queries."""
    m = solution.n_segments
    frac = np.linspace(0.0, 1.0, pts_per_seg + 1)[:-1]
    seg = np.repeat(np.arange(m)[:, None], len(frac), axis=1)
    t = solution.frames.lengths[:, None] * frac[None, :]
    pts = evaluate_many(solution, seg.ravel(), t.ravel())
    end = evaluate_many(solution, np.array([m - 1]),
                        np.array([solution.frames.lengths[-1]]))
    pts = np.vstack([pts, end])
    d = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(d)])
    return pts, s


def _lead_fit(pts: np.ndarray, s: np.ndarray, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    lo = min(lo, s[-1] * 0.45)
    hi = min(hi, s[-1] * 0.48 + lo * 0.0)
    hi = max(hi, lo + 8.0)
    sel = (s >= lo) & (s <= hi)
    p = pts[sel] if sel.sum() >= 4 else pts[: max(4, len(pts) // 5)]
    c = p.mean(axis=0)
    _, _, vt = np.linalg.svd(p - c)
    return c, vt[0]


def harmonized_profiles(
    solutions: list[SplineSolution],
    lead_lo: float = 10.0,
    lead_hi: float = 42.0,
    n_samples: int = 1024,
) -> tuple[list[CurvatureProfile], list[np.ndarray]]:
    """Per-side profiles re-windowed between spline-based corner estimates.

    The pinned side ends inherit the raw corner estimates, whose pixel
    noise makes the two pieces of one cut measure slightly different
    lengths; that stretch error dominates the mate-match residual.  The
    smoothed lead-ins of the two sides meeting at a corner give a far
    more repeatable estimate, so each profile is cut back to the arc
    between the refined corners of its side.

    Returns the trimmed profiles and the refined corner per side start.
    """
    n_sides = len(solutions)
    dense = [_dense_curve(sol) for sol in solutions]
    corners = []
    for j in range(n_sides):
        pts_out, s_out = dense[j]                    # side j starts at corner j
        pts_in, s_in = dense[j - 1]                  # side j-1 ends at corner j
        c_out, d_out = _lead_fit(pts_out, s_out, lead_lo, lead_hi)
        total_in = s_in[-1]
        c_in, d_in = _lead_fit(pts_in[::-1], total_in - s_in[::-1], lead_lo, lead_hi)
        meet = _line_intersection(c_in, d_in, c_out, d_out)
        if meet is None:
            meet = pts_out[0]
        corners.append(meet)

    profiles = []
    for j in range(n_sides):
        pts, s = dense[j]
        full = curvature_profile(solutions[j], n_samples=n_samples)
        s0 = s[int(np.argmin(np.sum((pts - corners[j]) ** 2, axis=1)))]
        s1 = s[int(np.argmin(np.sum((pts - corners[(j + 1) % n_sides]) ** 2, axis=1)))]
        if not 0.0 <= s0 < s1 <= full.length + 1e-9 or (s1 - s0) < 0.5 * full.length:
            profiles.append(full)
            continue
        grid = np.linspace(s0, s1, n_samples)
        kappa = np.interp(grid, full.s, full.kappa)
        profiles.append(CurvatureProfile(length=s1 - s0, s=grid - s0, kappa=kappa))
    return profiles, corners
