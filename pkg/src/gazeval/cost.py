"""Oculomotor cost surface: amplitude value function plus two angle terms.

The per-pixel cost of shifting gaze from the current fixation x_t to a
candidate x is

    psi0(|x - x_t| / pixels_per_degree)
        + psi1 * relative_angle(x_prev, x_t, x)
        + psi2 * absolute_angle(x_t, x)

psi0 interpolates the tabulated amplitude values linearly over bin centers
and clamps outside the outermost centers. Angles are in radians, in [0, pi].
Values are added into the value map as-is; the polarity of "cost" is the
profile author's choice, never flipped here.
"""

from __future__ import annotations

import math

import numpy as np

from .dataio import CostProfile
from .errors import OutOfBoundsFixation
from .grid import Grid, PixelCoord


def amplitude(x_t: PixelCoord, x_next: PixelCoord) -> float:
    """Euclidean saccade length in working-resolution pixels."""
    return math.hypot(x_next.x - x_t.x, x_next.y - x_t.y)


def relative_angle(x_prev: PixelCoord, x_t: PixelCoord, x_next: PixelCoord) -> float:
    """Angle between the previous saccade vector and the candidate saccade.

    Degenerate geometry (zero-length candidate or previous saccade)
    contributes 0 rather than NaN.
    """
    ax, ay = x_next.x - x_t.x, x_next.y - x_t.y
    bx, by = x_t.x - x_prev.x, x_t.y - x_prev.y
    na = math.hypot(ax, ay)
    nb = math.hypot(bx, by)
    if na == 0.0 or nb == 0.0:
        return 0.0
    c = (ax * bx + ay * by) / (na * nb)
    return math.acos(min(1.0, max(-1.0, c)))


def absolute_angle(x_t: PixelCoord, x_next: PixelCoord) -> float:
    """Angle of the candidate saccade against the rightward horizontal axis.

    arccos of the normalized dot with [1, 0]; up and down fold together.
    Zero-length saccades contribute 0.
    """
    ax, ay = x_next.x - x_t.x, x_next.y - x_t.y
    na = math.hypot(ax, ay)
    if na == 0.0:
        return 0.0
    return math.acos(min(1.0, max(-1.0, ax / na)))


def amplitude_value(profile: CostProfile, amplitude_deg) -> np.ndarray:
    """psi0 lookup: piecewise-linear over bin centers, edge-clamped."""
    return np.interp(
        amplitude_deg, profile.amplitude_centers, np.asarray(profile.amplitude_values)
    )


def _require_inside(p: PixelCoord, width: int, height: int, label: str) -> None:
    if not p.inside(width, height):
        raise OutOfBoundsFixation(
            f"{label} ({p.x}, {p.y}) outside {width}x{height} grid"
        )


def cost_map(
    width: int,
    height: int,
    x_prev: PixelCoord,
    x_t: PixelCoord,
    profile: CostProfile,
) -> Grid:
    """Cost of every candidate pixel given the current and previous fixation.

    Depends only on the last two fixations; earlier history never enters.
    """
    _require_inside(x_prev, width, height, "previous fixation")
    _require_inside(x_t, width, height, "current fixation")

    xs = np.arange(width, dtype=np.float64)[None, :]
    ys = np.arange(height, dtype=np.float64)[:, None]
    dx = xs - x_t.x
    dy = ys - x_t.y
    amp = np.hypot(dx, dy)
    moved = amp > 0.0
    safe = np.where(moved, amp, 1.0)

    out = amplitude_value(profile, amp / profile.pixels_per_degree)

    if profile.psi1 != 0.0:
        bx, by = x_t.x - x_prev.x, x_t.y - x_prev.y
        nb = math.hypot(bx, by)
        if nb > 0.0:
            cos_rel = np.clip((dx * bx + dy * by) / (safe * nb), -1.0, 1.0)
            out = out + profile.psi1 * np.where(moved, np.arccos(cos_rel), 0.0)

    if profile.psi2 != 0.0:
        cos_abs = np.clip(dx / safe, -1.0, 1.0)
        out = out + profile.psi2 * np.where(moved, np.arccos(cos_abs), 0.0)

    return Grid(np.ascontiguousarray(out))
