"""Side descriptors and pairwise curvature-difference matching.

A side's quality energy is the integral of squared curvature over arc
length; sides below the straight threshold are puzzle borders.  Two
sides mate when one, traversed in the opposite direction with negated
curvature (two pieces share one physical cut curve), has nearly the same
curvature profile; the match energy integrates the squared difference
after stretching the shorter side's abscissa onto the longer and
scanning a small set of end-point shifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .beam import CurvatureProfile

STRAIGHT_ENERGY_DEFAULT = 0.1
LENGTH_GATE_DEFAULT = 97.0
SHIFTS_DEFAULT = (-4.0, -2.0, 0.0, 2.0, 4.0)

CLASS_STRAIGHT = "Straight"
CLASS_CONVEX = "Convex"
CLASS_CONCAVE = "Concave"


@dataclass(frozen=True)
class SideDescriptor:
    """One side of one piece: curvature profile plus derived quantities."""

    piece: str
    side: int  # 1..4, clockwise
    profile: CurvatureProfile
    e_straight: float = STRAIGHT_ENERGY_DEFAULT
    length: float = field(init=False)
    energy: float = field(init=False)
    side_class: str = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "length", self.profile.length)
        object.__setattr__(self, "energy", side_energy(self.profile))
        object.__setattr__(self, "side_class",
                           classify_profile(self.profile, self.e_straight))

    @property
    def key(self) -> tuple[str, int]:
        return (self.piece, self.side)

    def is_straight(self, e_straight: float = STRAIGHT_ENERGY_DEFAULT) -> bool:
        return self.energy < e_straight


@dataclass(frozen=True)
class MatchScore:
    """Outcome of matching side a against side b."""

    side_a: tuple[str, int]
    side_b: tuple[str, int]
    energy: float
    shift: float
    length_ratio: float

    @property
    def rejected(self) -> bool:
        return not math.isfinite(self.energy)


def side_energy(profile: CurvatureProfile) -> float:
    """Bending-quality energy: trapezoid integral of kappa^2 over s."""
    return float(np.trapezoid(profile.kappa ** 2, profile.s))


def _dominant_mean(profile: CurvatureProfile, half_window: float = 20.0) -> float:
    """Arc-length-weighted mean curvature over the tab-dominant region.

    The region is the ±``half_window`` px stretch with the largest net
    turning: a tab head turns the tangent by far more than any cut
    wiggle (which curves out and back for zero net turn), so the sign
    there is the side's convexity."""
    s, k = profile.s, profile.kappa
    ds = s[1] - s[0]
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (k[1:] + k[:-1]) * ds)])
    m = max(int(round(half_window / ds)), 1)
    windowed = cum[2 * m:] - cum[:-2 * m]
    i = int(np.argmax(np.abs(windowed)))
    span = 2 * m * ds
    return float(windowed[i] / span)


def classify_profile(
    profile: CurvatureProfile,
    e_straight: float = STRAIGHT_ENERGY_DEFAULT,
) -> str:
    """Straight when the energy is below the threshold, else the sign of
    the dominant-region mean curvature separates Convex from Concave."""
    if side_energy(profile) < e_straight:
        return CLASS_STRAIGHT
    return CLASS_CONVEX if _dominant_mean(profile) > 0.0 else CLASS_CONCAVE


def classify_sides(
    descriptors: list[SideDescriptor],
    e_straight: float = STRAIGHT_ENERGY_DEFAULT,
) -> list[str]:
    classes = []
    for d in descriptors:
        if d.energy < e_straight:
            classes.append(CLASS_STRAIGHT)
        else:
            classes.append(CLASS_CONVEX if _dominant_mean(d.profile) > 0.0 else CLASS_CONCAVE)
    return classes


def length_ratio(a: SideDescriptor | float, b: SideDescriptor | float) -> float:
    """Length agreement in percent: 100 * min / max."""
    la = a.length if isinstance(a, SideDescriptor) else float(a)
    lb = b.length if isinstance(b, SideDescriptor) else float(b)
    if la <= 0 or lb <= 0:
        raise ValueError("lengths must be positive")
    return 100.0 * min(la, lb) / max(la, lb)


def mate_profile(kappa: np.ndarray) -> np.ndarray:
    """Curvature a mating side would show: reversed traversal, negated sign."""
    return -kappa[::-1]


def pair_energy(
    a: SideDescriptor,
    b: SideDescriptor,
    shifts=SHIFTS_DEFAULT,
    length_gate: float = LENGTH_GATE_DEFAULT,
) -> MatchScore:
    """Minimum curvature-difference energy of side a against mate-side b.

    Rejects (infinite energy, nothing thrown) when the length ratio falls
    below the gate.  Otherwise the shorter profile's abscissa stretches
    onto the longer (uniform grids stay aligned sample-for-sample), the
    mate transform is applied to b, and each shift offsets a's samples by
    the nearest whole grid step; the overlap window shrinks accordingly
    and the energy is not renormalized.
    """
    ratio = length_ratio(a, b)
    if ratio < length_gate:
        return MatchScore(a.key, b.key, float("inf"), 0.0, ratio)

    ka = a.profile.kappa
    kb = mate_profile(b.profile.kappa)
    n = len(ka)
    if len(kb) != n:
        raise ValueError("profiles must share the sample count")
    long_len = max(a.length, b.length)
    ds = long_len / (n - 1)

    best_e = float("inf")
    best_shift = 0.0
    for shift in shifts:
        m = int(round(shift / ds))
        if m >= 0:
            ka_w = ka[m:]
            kb_w = kb[: n - m]
        else:
            ka_w = ka[: n + m]
            kb_w = kb[-m:]
        if len(ka_w) < 2:
            continue
        diff = ka_w - kb_w
        e = float(np.trapezoid(diff * diff, dx=ds))
        if e < best_e - 1e-15 or (abs(e - best_e) <= 1e-15 and abs(shift) < abs(best_shift)):
            best_e = e
            best_shift = float(shift)
    return MatchScore(a.key, b.key, best_e, best_shift, ratio)


def all_pairs(
    descriptors: list[SideDescriptor],
    shifts=SHIFTS_DEFAULT,
    length_gate: float = LENGTH_GATE_DEFAULT,
    e_straight: float = STRAIGHT_ENERGY_DEFAULT,
) -> list[MatchScore]:
    """Match scores for every unordered pair of non-straight sides."""
    curved = [d for d in descriptors if not d.is_straight(e_straight)]
    scores = []
    for i in range(len(curved)):
        for j in range(i + 1, len(curved)):
            scores.append(pair_energy(curved[i], curved[j], shifts, length_gate))
    return scores
