"""Deterministic synthetic puzzle generator.

Pieces live on a rows x cols grid of square cells.  Every interior edge
gets a smooth curvature bump (the tab) with randomized amplitude, center
and width; the two pieces sharing an edge use exactly complementary
curves before noise.  Boundary noise then displaces each boundary sample
along the local outward normal by a clipped zero-mean draw.  All
randomness flows from the single seed through counter-based Philox
streams keyed by stable entity ids, so output is byte-reproducible and
independent of generation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SAMPLES_PER_EDGE = 160
NOISE_CLIP_SIGMAS = 3.0


@dataclass(frozen=True)
class SynthSpec:
    rows: int
    cols: int
    piece_size: float = 200.0
    tab_amplitude: float = 40.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be >= 0")


def _stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for one entity; order-independent."""
    counter = 0
    for part in key:
        counter = counter * 1_000_003 + (part + 7)
    return np.random.Generator(np.random.Philox(key=seed, counter=counter << 64))


def _arc(center: np.ndarray, radius: float, a0: float, a1: float, n: int) -> np.ndarray:
    """Circular arc sampled from angle a0 to a1 (radians, signed sweep)."""
    ang = np.linspace(a0, a1, n)
    return center + radius * np.column_stack([np.cos(ang), np.sin(ang)])


def _tab_path(length: float, center: float, r: float, big: float, phi: float,
              sign: float, spacing: float) -> np.ndarray:
    """Keyhole tab on a unit edge frame: x along the edge in [0, length],
    y the bulge direction; tangent-continuous fillet / head / fillet arcs.

    ``phi`` is the fillet turning angle (> pi/2 gives a necked head),
    ``r`` the fillet radius and ``big`` the head radius; the apex height
    comes out as (r + big) * (1 - cos(phi)).  Sharp fillets and broad
    heads keep both visually distinct from piece corners.
    """
    total_r = r + big
    e = total_r * np.sin(phi)  # half-width of the tab at the baseline
    x0 = center

    def n_of(arc_len):
        return max(int(np.ceil(arc_len / spacing)), 6)

    # left fillet: center (x0 - e, r), tangent angle 0 -> phi;
    # point angle runs -pi/2 -> phi - pi/2
    c_left = np.array([x0 - e, r])
    left = _arc(c_left, r, -np.pi / 2.0, phi - np.pi / 2.0, n_of(r * phi))
    # head: clockwise (point angle decreasing) from tangent phi to -phi,
    # wrapping 2*phi > pi around the axis
    c_head = np.array([x0, (r + big) * (1.0 - np.cos(phi)) - big])
    head = _arc(c_head, big, phi + np.pi / 2.0, np.pi / 2.0 - phi,
                n_of(big * 2 * phi))
    # right fillet mirrors the left one
    c_right = np.array([x0 + e, r])
    right = _arc(c_right, r, np.pi * 1.5 - phi, np.pi * 1.5, n_of(r * phi))

    path = np.vstack([left[1:], head[1:], right[1:-1]])
    lead_in = np.column_stack([
        np.arange(0.0, x0 - e, spacing), np.zeros(len(np.arange(0.0, x0 - e, spacing)))])
    lead_out_x = np.arange(x0 + e, length, spacing)
    if len(lead_out_x) == 0 or lead_out_x[-1] < length:
        lead_out_x = np.append(lead_out_x, length)
    lead_out = np.column_stack([lead_out_x, np.zeros(len(lead_out_x))])
    pts = np.vstack([lead_in, [[x0 - e, 0.0]], path, lead_out])
    pts[:, 1] *= sign
    return pts


@dataclass(frozen=True)
class EdgeCurve:
    """Shared edge sampled start->end as a polyline in world coordinates."""

    points: np.ndarray


def _edge_curve(spec: SynthSpec, kind: str, r: int, c: int) -> EdgeCurve:
    """Edge between two cells.  kind 'h' = horizontal edge between rows
    (r-1, r) spanning column c; kind 'v' = vertical edge between columns
    (c-1, c) spanning row r.  Border edges are straight."""
    s = spec.piece_size
    if kind == "h":
        start = np.array([c * s, r * s])
        end = np.array([(c + 1) * s, r * s])
        border = r == 0 or r == spec.rows
        key = (0, r, c)
    else:
        start = np.array([c * s, r * s])
        end = np.array([c * s, (r + 1) * s])
        border = c == 0 or c == spec.cols
        key = (1, r, c)
    spacing = s / SAMPLES_PER_EDGE
    d = end - start
    length = float(np.hypot(*d))
    t = d / length
    left = np.array([-t[1], t[0]])
    if border:
        u = np.linspace(0.0, 1.0, SAMPLES_PER_EDGE + 1)
        return EdgeCurve(start + u[:, None] * d[None, :])
    rng = _stream(spec.seed, *key)
    head_r = spec.tab_amplitude * rng.uniform(0.44, 0.52)
    fillet_r = spec.tab_amplitude * rng.uniform(0.13, 0.18)
    phi = rng.uniform(1.90, 2.06)  # 107..117 degrees
    center = length * rng.uniform(0.40, 0.60)
    sign = float(rng.choice([-1.0, 1.0]))
    local = _tab_path(length, center, fillet_r, head_r, phi, sign, spacing)
    # cut wiggle: a smooth random offset field on the lead-in stretches,
    # clear of the corners and of the tab span, gives every edge a
    # high-dimensional curvature signature beyond the tab itself;
    # without it, tabs drawn from a small parameter family are too easy
    # to confuse with each other
    x = local[:, 0]
    e_span = (head_r + fillet_r) * np.sin(phi)
    zones = [(0.18 * length, center - e_span - 6.0),
             (center + e_span + 6.0, 0.82 * length)]
    for zone_lo, zone_hi in zones:
        width = zone_hi - zone_lo
        if width < 18.0:
            continue
        for _ in range(4):
            w = rng.uniform(0.40 * width, 0.95 * width)
            u0 = rng.uniform(zone_lo + w / 2.0, zone_hi - w / 2.0)
            amp = rng.uniform(3.2, 5.5) * rng.choice([-1.0, 1.0])
            rel = (x - u0) / w
            inside = np.abs(rel) < 0.5
            local[inside, 1] += amp * np.cos(np.pi * rel[inside]) ** 2
    world = start + local[:, 0:1] * t[None, :] + local[:, 1:2] * left[None, :]
    return EdgeCurve(world)


def _edge_points(edge: EdgeCurve, reverse: bool) -> np.ndarray:
    """Edge polyline, optionally traversed end->start (the exact
    complement both mating pieces share)."""
    return edge.points[::-1] if reverse else edge.points


def piece_outline(spec: SynthSpec, r: int, c: int) -> np.ndarray:
    """Noise-free closed outline of cell (r, c), clockwise (negative
    shoelace with y increasing along rows), starting at the cell's
    (c*s, r*s) corner."""
    top = _edge_curve(spec, "h", r, c)
    bottom = _edge_curve(spec, "h", r + 1, c)
    left = _edge_curve(spec, "v", r, c)
    right = _edge_curve(spec, "v", r, c + 1)
    # traversal: down the left edge, along the bottom, up the right,
    # back along the top; shoelace is negative for this loop
    path = [
        _edge_points(left, reverse=False)[:-1],
        _edge_points(bottom, reverse=False)[:-1],
        _edge_points(right, reverse=True)[:-1],
        _edge_points(top, reverse=True)[:-1],
    ]
    return np.vstack(path)


def _apply_noise(spec: SynthSpec, piece_key: int, outline: np.ndarray) -> np.ndarray:
    """Displace each boundary sample along its outward normal by a
    clipped zero-mean draw with the configured sigma (white per-sample
    noise; the nonzero-winding rasterization absorbs the local zigzag).
    """
    if spec.noise_sigma == 0.0:
        return outline
    rng = _stream(spec.seed, 2, piece_key)
    draws = rng.normal(0.0, spec.noise_sigma, len(outline))
    clip = NOISE_CLIP_SIGMAS * spec.noise_sigma
    draws = np.clip(draws, -clip, clip)
    nxt = np.roll(outline, -1, axis=0)
    prv = np.roll(outline, 1, axis=0)
    tang = nxt - prv
    norm = np.hypot(tang[:, 0], tang[:, 1])
    norm[norm == 0] = 1.0
    tang /= norm[:, None]
    # outline is clockwise (negative shoelace), so the outward normal of
    # the solid region is the tangent rotated by +pi/2
    outward = np.column_stack([-tang[:, 1], tang[:, 0]])
    # sanity: for the leftmost sample the outward normal must point to -x;
    # flip globally if the orientation puts it inward
    i = int(np.argmin(outline[:, 0]))
    if outward[i, 0] > 0:
        outward = -outward
    return outline + draws[:, None] * outward


def rasterize_polygon(points: np.ndarray, margin: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Boolean mask of the polygon via nonzero-winding scanline fill.

    Returns (bits, origin) where origin is the (x, y) of pixel (0, 0)'s
    center.  Self-intersections from noise fill solid under the nonzero
    rule; the largest 8-connected component is kept and interior holes
    are filled so downstream mask invariants hold.
    """
    lo = np.floor(points.min(axis=0)).astype(int) - margin
    hi = np.ceil(points.max(axis=0)).astype(int) + margin
    w = hi[0] - lo[0] + 1
    h = hi[1] - lo[1] + 1
    bits = np.zeros((h, w), dtype=bool)
    px = points[:, 0] - lo[0]
    py = points[:, 1] - lo[1]
    x0, y0 = px, py
    x1, y1 = np.roll(px, -1), np.roll(py, -1)
    for row in range(h):
        yc = row  # pixel centers at integer coordinates
        cross = ((y0 <= yc) & (y1 > yc)) | ((y1 <= yc) & (y0 > yc))
        if not np.any(cross):
            continue
        tt = (yc - y0[cross]) / (y1[cross] - y0[cross])
        xs = x0[cross] + tt * (x1[cross] - x0[cross])
        direction = np.where(y1[cross] > y0[cross], 1, -1)
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        direction = direction[order]
        winding = np.cumsum(direction)
        inside_runs = winding != 0
        for k in range(len(xs) - 1):
            if inside_runs[k]:
                a = int(np.ceil(xs[k]))
                b = int(np.floor(xs[k + 1]))
                if b >= a:
                    bits[row, a:b + 1] = True
    bits = _largest_component_filled(bits)
    return bits, lo.astype(float)


def _largest_component_filled(bits: np.ndarray) -> np.ndarray:
    """Keep the largest 8-connected component and fill interior holes."""
    from scipy import ndimage

    labels, count = ndimage.label(bits, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return bits
    sizes = ndimage.sum_labels(np.ones_like(bits, dtype=np.int64), labels,
                               index=np.arange(1, count + 1))
    solid = labels == (1 + int(np.argmax(sizes)))
    return ndimage.binary_fill_holes(solid)


def generate_piece_mask(spec: SynthSpec, r: int, c: int) -> tuple[np.ndarray, int]:
    """Noisy rasterized mask of one piece plus its scan rotation.

    Each piece is scanned in a random orientation (multiple of 90
    degrees), like independently photographed pieces would be.
    """
    outline = piece_outline(spec, r, c)
    piece_key = r * spec.cols + c
    noisy = _apply_noise(spec, piece_key, outline)
    rot = int(_stream(spec.seed, 3, piece_key).integers(0, 4))
    center = noisy.mean(axis=0)
    ang = rot * np.pi / 2.0
    rmat = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    rotated = (noisy - center) @ rmat.T
    bits, _ = rasterize_polygon(rotated)
    return bits, rot


def piece_id(r: int, c: int) -> str:
    return f"piece_{r:02d}_{c:02d}"


def ground_truth(spec: SynthSpec) -> dict:
    """Grid layout and the set of mating edges as generated.

    Side indices are combinatorial here: this records which piece pairs
    share an edge (adjacency truth); side-level identity is established
    in tests through geometry, not through this file.
    """
    cells = []
    for r in range(spec.rows):
        for c in range(spec.cols):
            piece_key = r * spec.cols + c
            rot = int(_stream(spec.seed, 3, piece_key).integers(0, 4))
            cells.append({"piece": piece_id(r, c), "scan_rotation": rot})
    mates = []
    for r in range(spec.rows):
        for c in range(spec.cols):
            if c + 1 < spec.cols:
                mates.append([piece_id(r, c), piece_id(r, c + 1)])
            if r + 1 < spec.rows:
                mates.append([piece_id(r, c), piece_id(r + 1, c)])
    return {
        "rows": spec.rows,
        "cols": spec.cols,
        "piece_size": spec.piece_size,
        "seed": spec.seed,
        "noise_sigma": spec.noise_sigma,
        "cells": cells,
        "adjacent": mates,
    }
