"""Fixation-level scoring: NSS and single-positive rank AUC.

NSS standardizes a map to zero mean and unit population standard deviation
and reads it at the fixation pixel. AUC treats the map as a classifier for
"is this the fixated pixel" against every other pixel, which collapses to
a rank statistic: ties credited half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyDataset, ZeroDimension
from .grid import Grid, PixelCoord, standardize


@dataclass(frozen=True)
class ScoreSample:
    """One scored prediction: where in which scanpath, and how well."""

    image_id: str
    subject_id: str
    ordinal_position: int  # 1-based index of the predicted fixation
    nss: float
    auc: float


def fixation_pixel(g: Grid, fix: PixelCoord) -> tuple[int, int]:
    """(row, col) of the pixel containing a fixation: round half up, clamp."""
    col = min(max(int(math.floor(fix.x + 0.5)), 0), g.width - 1)
    row = min(max(int(math.floor(fix.y + 0.5)), 0), g.height - 1)
    return row, col


def nss_at(g: Grid, fix: PixelCoord) -> float:
    row, col = fixation_pixel(g, fix)
    return float(standardize(g).data[row, col])


def nss_set(g: Grid, fixations) -> float:
    """Mean standardized value over fixations; one standardization pass."""
    fixations = list(fixations)
    if not fixations:
        raise EmptyDataset("nss_set needs at least one fixation")
    z = standardize(g).data
    total = 0.0
    for f in fixations:
        row, col = fixation_pixel(g, f)
        total += float(z[row, col])
    return total / len(fixations)


def auc_at(g: Grid, fix: PixelCoord) -> float:
    """Single-positive ROC area with all non-fixated pixels as negatives.

    Closed form: (#{pixels < v_f} + 0.5 * #{other pixels == v_f}) / (N - 1).
    """
    n = g.data.size
    if n < 2:
        raise ZeroDimension("AUC needs at least two pixels")
    row, col = fixation_pixel(g, fix)
    v_f = g.data[row, col]
    less = int(np.count_nonzero(g.data < v_f))
    ties = int(np.count_nonzero(g.data == v_f)) - 1  # exclude the positive itself
    return (less + 0.5 * ties) / (n - 1)


def auc_set(g: Grid, fixations) -> float:
    fixations = list(fixations)
    if not fixations:
        raise EmptyDataset("auc_set needs at least one fixation")
    return sum(auc_at(g, f) for f in fixations) / len(fixations)
