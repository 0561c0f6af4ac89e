"""File formats: PBM masks, point lists, descriptor/layout JSON, CSV, SVG.

Formats are plain text and deterministic: JSON uses sorted keys and
full-precision float repr, masks are ASCII portable bitmaps, curvature
profiles are two-column CSV with an "s,kappa" header.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .beam import CurvatureProfile
from .errors import ParseError
from .matching import MatchScore, SideDescriptor

SVG_NS = "http://www.w3.org/2000/svg"


# ── portable bitmaps ──────────────────────────────────────────────

def write_pbm(path, bits: np.ndarray) -> None:
    """ASCII PBM (P1); 1 = foreground."""
    bits = np.asarray(bits, dtype=bool)
    h, w = bits.shape
    lines = [f"P1", f"{w} {h}"]
    for row in bits:
        digits = "".join("1" if v else "0" for v in row)
        for start in range(0, len(digits), 68):
            lines.append(digits[start:start + 68])
    Path(path).write_text("\n".join(lines) + "\n")


def read_pbm(path) -> np.ndarray:
    """Read an ASCII (P1) or binary (P4) portable bitmap."""
    raw = Path(path).read_bytes()
    if raw[:2] == b"P1":
        tokens = []
        for ln, line in enumerate(raw.decode("ascii", "replace").splitlines(), 1):
            body = line.split("#", 1)[0]
            tokens.extend((tok, ln) for tok in body.split())
        if not tokens or tokens[0][0] != "P1":
            raise ParseError("not a P1 bitmap", line=1)
        try:
            w = int(tokens[1][0])
            h = int(tokens[2][0])
            digits = "".join(t for t, _ in tokens[3:])
            if len(digits) < w * h:
                raise ParseError(f"expected {w * h} bits, found {len(digits)}",
                                 line=tokens[-1][1] if tokens else 1)
            data = np.frombuffer(digits[:w * h].encode(), dtype=np.uint8) - ord("0")
            if np.any(data > 1):
                raise ParseError("bitmap digits must be 0 or 1", line=1)
        except (ValueError, IndexError) as exc:
            raise ParseError(f"malformed P1 header: {exc}", line=1) from exc
        return data.reshape(h, w).astype(bool)
    if raw[:2] == b"P4":
        parts = raw.split(maxsplit=3)
        try:
            w, h = int(parts[1]), int(parts[2])
        except (ValueError, IndexError) as exc:
            raise ParseError("malformed P4 header", line=1) from exc
        body = parts[3] if len(parts) > 3 else b""
        row_bytes = (w + 7) // 8
        if len(body) < row_bytes * h:
            raise ParseError("truncated P4 body", line=1)
        arr = np.frombuffer(body[:row_bytes * h], dtype=np.uint8).reshape(h, row_bytes)
        bits = np.unpackbits(arr, axis=1)[:, :w]
        return bits.astype(bool)
    raise ParseError("unsupported bitmap magic (want P1 or P4)", line=1)


# ── point lists and piece files ───────────────────────────────────

def read_point_list(path) -> np.ndarray:
    """One \"x y\" pair per line; '#' starts a comment."""
    pts = []
    for ln, line in enumerate(Path(path).read_text().splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'x y', got {body!r}", line=ln)
        try:
            pts.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ParseError(f"non-numeric coordinate {body!r}", line=ln) from exc
    if len(pts) < 8:
        raise ParseError("need at least 8 points for a closed outline", line=len(pts))
    return np.asarray(pts, dtype=float)


def read_piece_file(path) -> tuple[str, np.ndarray, bool]:
    """Piece JSON: {"id": str, "points": [[x, y], ...], "closed": bool}."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    try:
        pid = str(doc["id"])
        pts = np.asarray(doc["points"], dtype=float)
        closed = bool(doc.get("closed", True))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed piece file: {exc}", line=1) from exc
    if pts.ndim != 2 or pts.shape[1] != 2 or (closed and len(pts) < 8):
        raise ParseError("points must be an (n>=8, 2) list for closed outlines", line=1)
    return pid, pts, closed


# ── descriptors ───────────────────────────────────────────────────

def _json_dump(doc, path) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def write_descriptor(path, piece_id: str, sides: list[SideDescriptor],
                     outlines: list[np.ndarray], corners: list[np.ndarray]) -> None:
    """Descriptor JSON for one piece: per-side class/energy/profile plus
    the smoothed outline polyline and corner points for rendering."""
    doc = {
        "id": piece_id,
        "sides": [
            {
                "side": d.side,
                "length": d.length,
                "energy": d.energy,
                "class": d.side_class,
                "corner": [float(corners[i][0]), float(corners[i][1])],
                "outline": [[float(x), float(y)] for x, y in outlines[i]],
                "profile": {
                    "length": d.profile.length,
                    "kappa": [float(v) for v in d.profile.kappa],
                },
            }
            for i, d in enumerate(sides)
        ],
    }
    _json_dump(doc, path)


def read_descriptor(path, e_straight: float = 0.1) -> tuple[str, list[SideDescriptor], list[np.ndarray], list[np.ndarray]]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    pid = str(doc["id"])
    sides, outlines, corners = [], [], []
    for entry in doc["sides"]:
        kappa = np.asarray(entry["profile"]["kappa"], dtype=float)
        length = float(entry["profile"]["length"])
        prof = CurvatureProfile(length=length,
                                s=np.linspace(0.0, length, len(kappa)),
                                kappa=kappa)
        sides.append(SideDescriptor(piece=pid, side=int(entry["side"]),
                                    profile=prof, e_straight=e_straight))
        outlines.append(np.asarray(entry["outline"], dtype=float))
        corners.append(np.asarray(entry["corner"], dtype=float))
    return pid, sides, outlines, corners


def write_layout(path, rows: int, cols: int, cells: list[dict]) -> None:
    _json_dump({"rows": rows, "cols": cols, "cells": cells}, path)


def write_ground_truth(path, doc: dict) -> None:
    _json_dump(doc, path)


# ── CSV ───────────────────────────────────────────────────────────

def write_profile_csv(path, profile: CurvatureProfile) -> None:
    lines = ["s,kappa"]
    lines.extend(f"{s!r},{k!r}" for s, k in zip(profile.s, profile.kappa))
    Path(path).write_text("\n".join(lines) + "\n")


def write_matches_csv(path, scores: list[MatchScore]) -> None:
    lines = ["piece_a,side_a,piece_b,side_b,energy,shift,length_ratio"]
    for sc in scores:
        lines.append(
            f"{sc.side_a[0]},{sc.side_a[1]},{sc.side_b[0]},{sc.side_b[1]},"
            f"{sc.energy!r},{sc.shift!r},{sc.length_ratio!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


# ── SVG ───────────────────────────────────────────────────────────

def _svg_header(xmin, ymin, width, height) -> str:
    return (
        f'<svg xmlns="{SVG_NS}" viewBox="{xmin:.1f} {ymin:.1f} {width:.1f} {height:.1f}" '
        f'width="{width:.0f}" height="{height:.0f}">'
    )


def _polyline(points: np.ndarray, stroke: str, width: float = 0.8,
              dash: str | None = None) -> str:
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return (f'<polyline fill="none" stroke="{stroke}" stroke-width="{width}"'
            f'{extra} points="{coords}"/>')


def write_overlay_svg(path, b_points: np.ndarray, control: np.ndarray,
                      spline: np.ndarray) -> None:
    """Measured points, trial polygon and final spline for one piece."""
    allpts = np.vstack([b_points, control, spline])
    lo = allpts.min(axis=0) - 5
    hi = allpts.max(axis=0) + 5
    parts = [_svg_header(lo[0], lo[1], hi[0] - lo[0], hi[1] - lo[1])]
    for x, y in b_points:
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="0.7" fill="black"/>')
    parts.append(_polyline(control, "orange", 0.6, dash="2,2"))
    parts.append(_polyline(spline, "blue", 1.0))
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def write_assembled_svg(path, rows: int, cols: int, cells: list[dict],
                        outlines: dict[str, np.ndarray],
                        corners: dict[str, np.ndarray],
                        cell_size: float) -> None:
    """Assembled puzzle: each piece's outline rotated so its left-facing
    side runs downward (the outline-traversal direction of a left side),
    then translated onto its grid cell."""
    pad = 0.2 * cell_size
    width = cols * cell_size + 2 * pad
    height = rows * cell_size + 2 * pad
    parts = [_svg_header(-pad, -pad, width, height)]
    for idx, cell in enumerate(cells):
        r, c = divmod(idx, cols)
        pid = cell["piece"]
        rot = int(cell["rotation"])
        outline = outlines[pid]
        quad = corners[pid]
        chord = quad[(rot + 1) % 4] - quad[rot]
        ang = np.pi / 2.0 - np.arctan2(chord[1], chord[0])
        rmat = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
        pts = (outline - outline.mean(axis=0)) @ rmat.T
        pts = pts - pts.mean(axis=0) + np.array([(c + 0.5) * cell_size, (r + 0.5) * cell_size])
        parts.append(_polyline(pts, "black", 1.0))
        cx, cy = (c + 0.5) * cell_size, (r + 0.5) * cell_size
        parts.append(
            f'<text x="{cx:.1f}" y="{cy:.1f}" font-size="{cell_size * 0.12:.1f}" '
            f'text-anchor="middle">{pid}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
