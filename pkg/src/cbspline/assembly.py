"""Greedy reconstruction of the puzzle grid from classified sides.

Grid convention: cell (0, 0) is the seed corner, columns grow along the
first row.  A piece's four sides are stored in outline-traversal order;
``rotation`` k means side k faces LEFT, and the traversal order then
puts side k+1 at the BOTTOM, k+2 at the RIGHT and k+3 at the TOP of the
cell (mod 4).  Assembly fills row 0 left to right until a second corner
closes it, deduces the row count from the piece total, then fills each
following row left to right against the top (and left) neighbors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import AssemblyStuck, NoCandidate, NoCornerFound
from .matching import (
    CLASS_CONCAVE,
    CLASS_CONVEX,
    CLASS_STRAIGHT,
    LENGTH_GATE_DEFAULT,
    SHIFTS_DEFAULT,
    MatchScore,
    SideDescriptor,
    pair_energy,
)

KIND_CORNER = "Corner"
KIND_BORDER = "Border"
KIND_INTERIOR = "Interior"
KIND_SINGLE = "Single"  # degenerate 1x1 puzzle: all four sides straight

# facing order implied by outline traversal when side k faces left
_FACINGS = ("left", "bottom", "right", "top")


@dataclass(frozen=True)
class PieceDescriptor:
    """A piece's four sides in outline-traversal order plus its kind."""

    piece: str
    sides: tuple[SideDescriptor, SideDescriptor, SideDescriptor, SideDescriptor]
    kind: str = field(init=False)

    def __post_init__(self):
        if len(self.sides) != 4:
            raise ValueError("a piece has exactly 4 sides")
        straight = [i for i, s in enumerate(self.sides) if s.side_class == CLASS_STRAIGHT]
        if len(straight) == 3:
            raise ValueError(
                f"piece {self.piece} has 3 straight sides; strip puzzles are not assemblable"
            )
        if len(straight) == 4:
            kind = KIND_SINGLE
        elif len(straight) == 2:
            a, b = straight
            if (b - a) % 4 not in (1, 3):
                raise ValueError(f"piece {self.piece} has opposite straight sides")
            kind = KIND_CORNER
        elif len(straight) == 1:
            kind = KIND_BORDER
        else:
            kind = KIND_INTERIOR
        object.__setattr__(self, "kind", kind)

    @property
    def straight_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.sides) if s.side_class == CLASS_STRAIGHT]

    def facing(self, rotation: int, facing: str) -> SideDescriptor:
        """Side that faces ``facing`` when placed with this rotation."""
        return self.sides[(rotation + _FACINGS.index(facing)) % 4]


@dataclass
class Placement:
    piece: str
    rotation: int  # side index that faces left
    energy: float = 0.0


@dataclass
class PuzzleState:
    """Grid under construction plus bookkeeping of used pieces/sides."""

    grid: dict[tuple[int, int], Placement] = field(default_factory=dict)
    cols: int | None = None
    rows: int | None = None
    used_pieces: set[str] = field(default_factory=set)
    matched_sides: set[tuple[str, int]] = field(default_factory=set)
    matches: list[MatchScore] = field(default_factory=list)

    def place(self, cell, placement, match_scores=()):
        r, c = cell
        if placement.piece in self.used_pieces:
            raise ValueError(f"piece {placement.piece} placed twice")
        self.grid[(r, c)] = placement
        self.used_pieces.add(placement.piece)
        for score in match_scores:
            for key in (score.side_a, score.side_b):
                if key in self.matched_sides:
                    raise ValueError(f"side {key} matched twice")
                self.matched_sides.add(key)
            self.matches.append(score)


def _sorted_pieces(pieces: list[PieceDescriptor]) -> list[PieceDescriptor]:
    return sorted(pieces, key=lambda p: p.piece)


def find_seed_corner(pieces: list[PieceDescriptor]) -> Placement:
    """Corner piece with the smallest sum of straight-side energies,
    oriented with its straight sides facing top and left."""
    best = None
    for p in _sorted_pieces(pieces):
        if p.kind != KIND_CORNER:
            continue
        i, j = p.straight_indices
        total = p.sides[i].energy + p.sides[j].energy
        if best is None or total < best[0] - 1e-15:
            # adjacent pair (a, a+1) in traversal order: side a+1 faces
            # left, which puts side a on top
            a = i if (j - i) % 4 == 1 else j
            best = (total, Placement(p.piece, (a + 1) % 4))
    if best is None:
        raise NoCornerFound("no piece with two adjacent straight sides")
    return best[1]


def _opposite(side_class: str) -> str:
    return CLASS_CONCAVE if side_class == CLASS_CONVEX else CLASS_CONVEX


def _candidate_scores(
    pieces_by_id: dict[str, PieceDescriptor],
    state: PuzzleState,
    straight_facings: tuple[str, ...],
    mate_constraints: list[tuple[str, SideDescriptor]],
    shifts,
    length_gate: float,
    exact_straight_count: bool = True,
) -> list[tuple[float, str, int, list[MatchScore]]]:
    """All admissible (energy, piece, rotation, scores) for one cell.

    A candidate must orient straight sides onto the cell's outer-border
    facings, expose the opposite convexity on every mated facing, and
    pass the length gate on each mate.  While the column count is still
    unknown (first-row fill) the straight-side count may exceed the
    requirement, which keeps corner pieces in the candidate set.
    """
    out = []
    for pid in sorted(pieces_by_id):
        if pid in state.used_pieces:
            continue
        piece = pieces_by_id[pid]
        n_straight = len(piece.straight_indices)
        if exact_straight_count:
            if n_straight != len(straight_facings):
                continue
        elif n_straight < len(straight_facings):
            continue
        for rot in range(4):
            ok = True
            for facing in straight_facings:
                if piece.facing(rot, facing).side_class != CLASS_STRAIGHT:
                    ok = False
                    break
            if not ok:
                continue
            scores = []
            total = 0.0
            for facing, open_side in mate_constraints:
                cand_side = piece.facing(rot, facing)
                if cand_side.side_class != _opposite(open_side.side_class):
                    ok = False
                    break
                score = pair_energy(open_side, cand_side, shifts, length_gate)
                if score.rejected:
                    ok = False
                    break
                scores.append(score)
                total += score.energy
            if ok:
                out.append((total, pid, rot, scores))
    out.sort(key=lambda item: (item[0], item[1], item[2]))
    return out


def next_border_piece(
    state: PuzzleState,
    open_side: SideDescriptor,
    candidates: list[PieceDescriptor],
    straight_facings: tuple[str, ...] = ("top",),
    mate_facing: str = "left",
    shifts=SHIFTS_DEFAULT,
    length_gate: float = LENGTH_GATE_DEFAULT,
    exact_straight_count: bool = False,
) -> tuple[Placement, list[MatchScore]]:
    """Best border/corner piece against one open side on the border run."""
    by_id = {p.piece: p for p in candidates}
    scored = _candidate_scores(
        by_id, state, straight_facings, [(mate_facing, open_side)],
        shifts, length_gate, exact_straight_count)
    if not scored:
        raise NoCandidate("no admissible border piece")
    total, pid, rot, scores = scored[0]
    return Placement(pid, rot, total), scores


def next_interior_piece(
    state: PuzzleState,
    left_side: SideDescriptor,
    top_side: SideDescriptor,
    candidates: list[PieceDescriptor],
    shifts=SHIFTS_DEFAULT,
    length_gate: float = LENGTH_GATE_DEFAULT,
) -> tuple[Placement, list[MatchScore]]:
    """Piece minimizing the sum of the two pair energies against the
    already-placed left and top sides."""
    by_id = {p.piece: p for p in candidates}
    scored = _candidate_scores(
        by_id, state, (), [("left", left_side), ("top", top_side)], shifts, length_gate)
    if not scored:
        raise NoCandidate("no admissible interior piece")
    total, pid, rot, scores = scored[0]
    return Placement(pid, rot, total), scores


def assemble(
    pieces: list[PieceDescriptor],
    shifts=SHIFTS_DEFAULT,
    length_gate: float = LENGTH_GATE_DEFAULT,
) -> PuzzleState:
    """Greedy left-to-right, top-to-bottom reconstruction of the grid."""
    pieces = _sorted_pieces(pieces)
    by_id = {p.piece: p for p in pieces}
    if len(by_id) != len(pieces):
        raise ValueError("duplicate piece ids")
    n = len(pieces)
    state = PuzzleState()

    if n == 1:
        (only,) = pieces
        if only.kind != KIND_SINGLE:
            raise AssemblyStuck(
                "a lone piece with curved sides cannot close a grid", cell=(0, 0))
        state.cols = state.rows = 1
        state.place((0, 0), Placement(only.piece, 0))
        return state

    seed = find_seed_corner(pieces)
    state.place((0, 0), seed)

    # first row: fill right until a piece closes the row with a straight
    # right side
    col = 0
    while state.cols is None:
        prev = state.grid[(0, col)]
        open_side = by_id[prev.piece].facing(prev.rotation, "right")
        if open_side.side_class == CLASS_STRAIGHT:
            state.cols = col + 1
            break
        col += 1
        if col >= n:
            raise AssemblyStuck("first row exceeded the piece count", cell=(0, col))
        try:
            placement, scores = next_border_piece(
                state, open_side, pieces, ("top",), "left", shifts, length_gate,
                exact_straight_count=False)
        except NoCandidate as exc:
            raise AssemblyStuck(
                f"no candidate for first-row cell (0, {col})", cell=(0, col)) from exc
        state.place((0, col), placement, scores)

    if n % state.cols != 0:
        raise AssemblyStuck(
            f"{n} pieces do not divide into rows of {state.cols}", cell=(1, 0))
    state.rows = n // state.cols

    for r in range(1, state.rows):
        for c in range(state.cols):
            top = state.grid[(r - 1, c)]
            top_side = by_id[top.piece].facing(top.rotation, "bottom")
            straight_facings = []
            if c == 0:
                straight_facings.append("left")
            if c == state.cols - 1:
                straight_facings.append("right")
            if r == state.rows - 1:
                straight_facings.append("bottom")
            try:
                if c == 0:
                    placement, scores = next_border_piece(
                        state, top_side, pieces, tuple(straight_facings), "top",
                        shifts, length_gate, exact_straight_count=True)
                else:
                    left = state.grid[(r, c - 1)]
                    left_side = by_id[left.piece].facing(left.rotation, "right")
                    if straight_facings:
                        by_avail = {p.piece: p for p in pieces}
                        scored = _candidate_scores(
                            by_avail, state, tuple(straight_facings),
                            [("left", left_side), ("top", top_side)],
                            shifts, length_gate)
                        if not scored:
                            raise NoCandidate("no admissible border piece")
                        total, pid, rot, scores = scored[0]
                        placement = Placement(pid, rot, total)
                    else:
                        placement, scores = next_interior_piece(
                            state, left_side, top_side, pieces, shifts, length_gate)
            except NoCandidate as exc:
                best = _best_rejected(state, pieces, by_id, r, c, shifts)
                raise AssemblyStuck(
                    f"no candidate for cell ({r}, {c}); best rejected: {best}",
                    cell=(r, c), rejected=best) from exc
            state.place((r, c), placement, scores)

    return state


def _best_rejected(state, pieces, by_id, r, c, shifts):
    """Diagnostics for AssemblyStuck: lowest raw energies ignoring gates."""
    top = state.grid.get((r - 1, c))
    if top is None:
        return []
    open_side = by_id[top.piece].facing(top.rotation, "bottom")
    rows = []
    for p in pieces:
        if p.piece in state.used_pieces:
            continue
        for rot in range(4):
            side = p.facing(rot, "top")
            score = pair_energy(open_side, side, shifts, length_gate=0.0)
            rows.append((score.energy, p.piece, rot))
    rows.sort(key=lambda t: t[0])
    return rows[:3]


def adjacency_pairs(state: PuzzleState, by_id: dict[str, PieceDescriptor]) -> set[frozenset]:
    """Set of matched side-key pairs implied by the final grid."""
    pairs = set()
    for (r, c), pl in state.grid.items():
        piece = by_id[pl.piece]
        right = state.grid.get((r, c + 1))
        if right is not None:
            a = piece.facing(pl.rotation, "right")
            b = by_id[right.piece].facing(right.rotation, "left")
            pairs.add(frozenset([a.key, b.key]))
        below = state.grid.get((r + 1, c))
        if below is not None:
            a = piece.facing(pl.rotation, "bottom")
            b = by_id[below.piece].facing(below.rotation, "top")
            pairs.add(frozenset([a.key, b.key]))
    return pairs
