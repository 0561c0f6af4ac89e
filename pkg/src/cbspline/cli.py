"""Command-line front end.

Subcommands:
  synth           write a deterministic synthetic puzzle (masks + truth)
  pipeline        masks/point lists -> descriptor JSON + CSV + SVG
  match-assemble  descriptors -> match table CSV + layout JSON + SVG

Exit codes: 0 ok, 2 parse error, 3 pipeline error, 4 assembly stuck.
The CBS_THREADS environment variable caps the parallel map over pieces.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io_formats as iof
from .assembly import PieceDescriptor, adjacency_pairs, assemble
from .beam import evaluate_many
from .contour import RasterMask, build_piece_contour, refine_side, trace_boundary
from .errors import AssemblyStuck, CbsplineError, ParseError
from .geometry import ContourSamples, dedup_consecutive, is_clockwise
from .matching import SideDescriptor, all_pairs
from .rigidity import SmoothingParams
from .synth import SynthSpec, generate_piece_mask, ground_truth, piece_id

EXIT_PARSE = 2
EXIT_PIPELINE = 3
EXIT_ASSEMBLY = 4


def _max_workers() -> int:
    env = os.environ.get("CBS_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _parallel_map(fn, items):
    if len(items) <= 1 or _max_workers() == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        return list(pool.map(fn, items))


def _params_from_args(args) -> SmoothingParams:
    return SmoothingParams(h=args.stride * 1.0, stride=args.stride,
                           decay=args.decay, h_final=args.h_final)


def _add_pipeline_params(sub):
    sub.add_argument("--h-final", type=float, default=10.0)
    sub.add_argument("--stride", type=int, default=20)
    sub.add_argument("--decay", type=float, default=1.2)
    sub.add_argument("--e-straight", type=float, default=0.1)


def _add_match_params(sub):
    sub.add_argument("--e-straight", type=float, default=0.1)
    sub.add_argument("--shifts", type=str, default="-4,-2,0,2,4",
                     help="comma-separated pixel shifts")
    sub.add_argument("--length-gate", type=float, default=97.0,
                     help="minimum length ratio percentage")


def _load_outline(path: Path) -> tuple[str, np.ndarray]:
    """Closed clockwise outline points from a mask / point list / piece file."""
    suffix = path.suffix.lower()
    if suffix == ".pbm":
        mask = RasterMask(iof.read_pbm(path))
        contour = trace_boundary(mask)
        return path.stem, contour.points
    if suffix == ".json":
        pid, pts, closed = iof.read_piece_file(path)
        if not closed:
            raise ParseError("piece files must carry closed outlines", line=1)
        return pid, pts
    pts = iof.read_point_list(path)
    return path.stem, pts


def process_piece(path: Path, outdir: Path, params: SmoothingParams,
                  e_straight: float) -> str:
    """Run the full per-piece pipeline and write its artifacts."""
    pid, pts = _load_outline(path)
    pts = dedup_consecutive(pts, closed=True)
    if not is_clockwise(pts):
        pts = np.vstack([pts[:1], pts[1:][::-1]])
    contour = ContourSamples(pts, closed=True)
    piece = build_piece_contour(contour)

    sides, outlines, corners, overlays = [], [], [], []
    for k, side in enumerate(piece.sides):
        solution, profile = refine_side(side, params)
        desc = SideDescriptor(piece=pid, side=k + 1, profile=profile, e_straight=e_straight)
        sides.append(desc)
        m = solution.n_segments
        tt = np.linspace(0.0, 1.0, 9)[None, :] * solution.frames.lengths[:, None]
        seg = np.repeat(np.arange(m)[:, None], 9, axis=1)
        curve = evaluate_many(solution, seg.ravel(), tt.ravel())
        outlines.append(curve[::3])
        corners.append(side.points[0])
        overlays.append((side.points, solution.polygon.points, curve))

    iof.write_descriptor(outdir / f"{pid}.json", pid, sides, outlines, corners)
    for k, d in enumerate(sides):
        iof.write_profile_csv(outdir / f"{pid}_side{k + 1}.csv", d.profile)
    b_all = np.vstack([o[0] for o in overlays])
    ctrl = np.vstack([o[1] for o in overlays])
    spline = np.vstack([o[2] for o in overlays])
    iof.write_overlay_svg(outdir / f"{pid}.svg", b_all, ctrl, spline)
    return pid


def cmd_pipeline(args) -> int:
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    params = _params_from_args(args)
    paths = sorted(Path(p) for p in args.inputs)
    try:
        ids = _parallel_map(
            lambda p: process_piece(p, outdir, params, args.e_straight), paths)
    except ParseError as exc:
        line = f" (line {exc.line})" if exc.line else ""
        print(f"error: {exc}{line}", file=sys.stderr)
        return EXIT_PARSE
    except CbsplineError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    print(f"processed {len(ids)} piece(s) into {outdir}")
    return 0


def cmd_match_assemble(args) -> int:
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    desc_dir = Path(args.descriptors)
    shifts = tuple(float(v) for v in args.shifts.split(","))
    files = sorted(desc_dir.glob("*.json"))
    files = [f for f in files if f.name not in ("layout.json", "truth.json")]
    if not files:
        print("error: no descriptor files found", file=sys.stderr)
        return EXIT_PARSE

    pieces, outlines, corners = [], {}, {}
    all_sides = []
    try:
        for f in files:
            pid, sides, side_outlines, side_corners = iof.read_descriptor(f, args.e_straight)
            pieces.append(PieceDescriptor(pid, tuple(sides)))
            outlines[pid] = np.vstack(side_outlines)
            corners[pid] = np.vstack(side_corners)
            all_sides.extend(sides)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    scores = all_pairs(all_sides, shifts=shifts, length_gate=args.length_gate,
                       e_straight=args.e_straight)
    iof.write_matches_csv(outdir / "matches.csv", scores)

    try:
        state = assemble(pieces, shifts=shifts, length_gate=args.length_gate)
    except AssemblyStuck as exc:
        print(f"assembly stuck: {exc}", file=sys.stderr)
        if exc.cell is not None:
            print(f"frontier cell: {exc.cell}", file=sys.stderr)
        for energy, pid, rot in exc.rejected or []:
            print(f"  rejected: piece={pid} rotation={rot} energy={energy:.6f}",
                  file=sys.stderr)
        return EXIT_ASSEMBLY
    except CbsplineError as exc:
        print(f"assembly error: {exc}", file=sys.stderr)
        return EXIT_ASSEMBLY

    cells = [
        {"piece": state.grid[(r, c)].piece, "rotation": state.grid[(r, c)].rotation}
        for r in range(state.rows) for c in range(state.cols)
    ]
    iof.write_layout(outdir / "layout.json", state.rows, state.cols, cells)
    cell_size = float(np.median([np.ptp(o[:, 0]) for o in outlines.values()]))
    iof.write_assembled_svg(outdir / "assembled.svg", state.rows, state.cols,
                            cells, outlines, corners, cell_size)
    by_id = {p.piece: p for p in pieces}
    print(f"assembled {state.rows}x{state.cols} grid; "
          f"{len(adjacency_pairs(state, by_id))} adjacencies")
    return 0


def cmd_synth(args) -> int:
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    spec = SynthSpec(rows=args.rows, cols=args.cols, piece_size=args.size,
                     tab_amplitude=args.tab, noise_sigma=args.noise, seed=args.seed)

    def one(rc):
        r, c = rc
        bits, _rot = generate_piece_mask(spec, r, c)
        iof.write_pbm(outdir / f"{piece_id(r, c)}.pbm", bits)
        return piece_id(r, c)

    cells = [(r, c) for r in range(spec.rows) for c in range(spec.cols)]
    _parallel_map(one, cells)
    iof.write_ground_truth(outdir / "truth.json", ground_truth(spec))
    print(f"wrote {len(cells)} masks + truth.json to {outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbspline",
        description="Contour smoothing, curvature profiles and puzzle assembly",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic puzzle")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--size", type=float, default=200.0)
    p.add_argument("--tab", type=float, default=40.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pipeline", help="smooth pieces and extract curvature")
    p.add_argument("inputs", nargs="+", help="mask .pbm / point .txt / piece .json")
    p.add_argument("-o", "--output", required=True)
    _add_pipeline_params(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("match-assemble", help="match sides and assemble the grid")
    p.add_argument("descriptors", help="directory of descriptor JSON files")
    p.add_argument("-o", "--output", required=True)
    _add_match_params(p)
    p.set_defaults(func=cmd_match_assemble)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
