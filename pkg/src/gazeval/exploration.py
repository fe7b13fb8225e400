"""Fixation-history map: a weighted sum of normalized Gaussians.

Each past fixation x_i deposits phi(i) * N(x; x_i, sigma^2 I) onto the
grid. The Gaussians are proper densities (peak 1 / (2 pi sigma^2)), not
unit-peak kernels, so the phi and sigma scales stay coupled the way fitted
parameter sets assume. No border truncation or renormalization is applied;
mass falling outside the image is simply lost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveSigma, OutOfBoundsFixation, SchemaViolation
from .grid import Grid, PixelCoord

INDEXING_MODES = ("lag", "absolute")


@dataclass(frozen=True)
class ExplorationParams:
    """Gaussian width plus the weight vector and how it attaches to history.

    Under lag indexing phis[0] weighs the most recent fixation, phis[1] the
    one before, and so on; under absolute indexing phis[i] weighs the i-th
    fixation of the scanpath. Histories longer than the vector clamp to the
    last defined weight.
    """

    phis: tuple[float, ...]
    sigma: float
    indexing: str = "lag"

    def __post_init__(self):
        object.__setattr__(self, "phis", tuple(float(p) for p in self.phis))
        if self.sigma <= 0:
            raise NonPositiveSigma(f"sigma must be > 0, got {self.sigma}")
        if not self.phis:
            raise SchemaViolation("phis must be non-empty")
        if self.indexing not in INDEXING_MODES:
            raise SchemaViolation(f"indexing must be one of {INDEXING_MODES}")

    def weight(self, i: int, t: int) -> float:
        """phi applied to fixation i (0-based) in a history ending at t."""
        k = t - i if self.indexing == "lag" else i
        return self.phis[min(k, len(self.phis) - 1)]


def gaussian_at(width: int, height: int, center: PixelCoord, sigma: float) -> Grid:
    """Normalized isotropic Gaussian density sampled at pixel centers."""
    if sigma <= 0:
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma}")
    xs = np.arange(width, dtype=np.float64)[None, :]
    ys = np.arange(height, dtype=np.float64)[:, None]
    d2 = (xs - center.x) ** 2 + (ys - center.y) ** 2
    return Grid(np.exp(-d2 / (2.0 * sigma * sigma)) / (2.0 * np.pi * sigma * sigma))


def exploration_map(
    width: int, height: int, history, params: ExplorationParams
) -> Grid:
    """Weighted sum of per-fixation Gaussians; empty history gives zeros."""
    history = list(history)
    for p in history:
        if not p.inside(width, height):
            raise OutOfBoundsFixation(
                f"history fixation ({p.x}, {p.y}) outside {width}x{height} grid"
            )
    acc = np.zeros((height, width), dtype=np.float64)
    t = len(history) - 1
    norm = 2.0 * np.pi * params.sigma * params.sigma
    xs = np.arange(width, dtype=np.float64)[None, :]
    ys = np.arange(height, dtype=np.float64)[:, None]
    for i, p in enumerate(history):
        d2 = (xs - p.x) ** 2 + (ys - p.y) ** 2
        acc += params.weight(i, t) * (
            np.exp(-d2 / (2.0 * params.sigma * params.sigma)) / norm
        )
    return Grid(acc)
