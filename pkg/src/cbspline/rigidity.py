"""Adaptive support rigidity from local point spacing and the smoothing length h.

A support covering arc length L gets rigidity D = L / h^4 (compliance
C = h^4 / L), which makes smoothing uniform per unit contour length
instead of per point.  The analytic suppression factor

    eps(xi / h) = xi^4 / (h^4 + xi^4)

predicts how much of a sinusoidal deviation of semi-period pi*xi
survives the smoothing, which is what guides the choice of h.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SmoothingParams:
    """Smoothing schedule: start at h, divide by decay until h_final."""

    h: float = 20.0
    stride: int = 20
    decay: float = 1.2
    h_final: float = 10.0

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("h must be > 0")
        if self.stride < 2:
            raise ValueError("stride K must be >= 2")
        if self.decay <= 1.0:
            raise ValueError("decay must be > 1")
        if not 0 < self.h_final <= self.h:
            raise ValueError("h_final must satisfy 0 < h_final <= h")

    def schedule(self) -> list[float]:
        """The h value of every solve; the last one is <= h_final."""
        values = [self.h]
        while values[-1] > self.h_final:
            values.append(values[-1] / self.decay)
        return values


def support_lengths(arc_gaps) -> np.ndarray:
    """Covered length per support from the gaps between projection points.

    For gaps (s_1, ..., s_M) between M+1 consecutive projection points,
    interior point i covers (s_i + s_{i+1}) / 2 and each end point covers
    its single adjacent half-gap, so the lengths sum to the total.
    """
    s = np.asarray(arc_gaps, dtype=float)
    if s.ndim != 1 or len(s) < 1:
        raise ValueError("need at least one arc gap")
    if np.any(s < 0):
        raise ValueError("arc gaps must be >= 0")
    lengths = np.empty(len(s) + 1)
    lengths[0] = s[0] / 2.0
    lengths[-1] = s[-1] / 2.0
    lengths[1:-1] = (s[:-1] + s[1:]) / 2.0
    return lengths


def rigidity(length: float, h: float) -> float:
    """Support rigidity D = L / h^4."""
    if length <= 0 or h <= 0:
        raise ValueError("length and h must be > 0")
    return length / h ** 4


def compliance(length: float, h: float) -> float:
    """Support compliance C = 1/D = h^4 / L."""
    if length <= 0 or h <= 0:
        raise ValueError("length and h must be > 0")
    return h ** 4 / length


def suppression(xi: float, h: float) -> float:
    """Surviving amplitude fraction of a sinusoid with semi-period pi*xi."""
    if xi <= 0 or h <= 0:
        raise ValueError("xi and h must be > 0")
    return xi ** 4 / (h ** 4 + xi ** 4)
