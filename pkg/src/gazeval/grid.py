"""Dense 2-D raster type and the pixel-level primitives everything builds on.

A :class:`Grid` is an immutable rectangle of finite float64 values addressed
by (x, y) pixel coordinates with the origin at the top-left, x growing
rightward and y growing downward. All operations here are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstantMap, DimensionMismatch, NonFiniteValue, ZeroDimension


@dataclass(frozen=True)
class PixelCoord:
    """A (possibly sub-pixel) location on a grid. x = column, y = row."""

    x: float
    y: float

    def inside(self, width: int, height: int) -> bool:
        return 0.0 <= self.x < width and 0.0 <= self.y < height


class Grid:
    """Immutable dense raster of finite 64-bit reals, row-major.

    The backing array has shape (height, width) and is marked read-only so
    grids can be shared freely across threads.
    """

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64, copy=True, order="C")
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"grid data must be 2-D and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue("grid values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Grid":
        # internal fast path: arr is a fresh, finite float64 array we own
        g = object.__new__(cls)
        arr.flags.writeable = False
        object.__setattr__(g, "data", arr)
        return g

    @classmethod
    def filled(cls, width: int, height: int, value: float = 0.0) -> "Grid":
        return cls._wrap(np.full((height, width), float(value)))

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> "Grid":
        arr = np.asarray(values, dtype=np.float64)
        if arr.size != width * height:
            raise ValueError(f"expected {width * height} values, got {arr.size}")
        return cls(arr.reshape(height, width))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        """(width, height)"""
        return self.data.shape[1], self.data.shape[0]

    @property
    def values(self) -> np.ndarray:
        """Row-major flat view of the values (read-only)."""
        return self.data.reshape(-1)

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid) and np.array_equal(self.data, other.data)

    def __repr__(self) -> str:
        return f"Grid({self.width}x{self.height})"


def downscale_bilinear(g: Grid, factor: int) -> Grid:
    """Shrink a grid by an integer factor with bilinear sampling.

    Output pixel (i, j) samples the source at the center of its factor x factor
    block: ((i + 0.5) * factor - 0.5, (j + 0.5) * factor - 0.5), clamped to the
    source border. Output dimensions use floor division; factor 1 returns a
    value-identical copy.
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    out_w, out_h = g.width // factor, g.height // factor
    if out_w < 1 or out_h < 1:
        raise ZeroDimension(
            f"downscale of {g.width}x{g.height} by {factor} would produce {out_w}x{out_h}"
        )
    if factor == 1:
        return Grid._wrap(g.data.copy())
    sx = (np.arange(out_w) + 0.5) * factor - 0.5
    sy = (np.arange(out_h) + 0.5) * factor - 0.5
    sx = np.clip(sx, 0.0, g.width - 1.0)
    sy = np.clip(sy, 0.0, g.height - 1.0)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, g.width - 1)
    y1 = np.minimum(y0 + 1, g.height - 1)
    tx = sx - x0
    ty = sy - y0
    # separable: blend columns first, then rows
    cols = g.data[:, x0] * (1.0 - tx) + g.data[:, x1] * tx
    out = cols[y0, :] * (1.0 - ty)[:, None] + cols[y1, :] * ty[:, None]
    return Grid._wrap(np.ascontiguousarray(out))


def standardize(g: Grid) -> Grid:
    """(g - mean) / population std. Raises ConstantMap when the std is zero."""
    mu = g.data.mean()
    sigma = g.data.std()  # population (ddof=0)
    if sigma == 0.0:
        raise ConstantMap("cannot standardize a constant map")
    return Grid._wrap((g.data - mu) / sigma)


def argmax(g: Grid) -> PixelCoord:
    """Coordinate of the maximum value; ties break to the smallest row-major index."""
    idx = int(np.argmax(g.data))
    y, x = divmod(idx, g.width)
    return PixelCoord(float(x), float(y))


def lincomb(terms) -> Grid:
    """Pointwise weighted sum of grids, accumulated in the given term order.

    All grids must share dimensions; at least one term is required.
    """
    terms = list(terms)
    if not terms:
        raise ValueError("lincomb needs at least one term")
    shape = terms[0][1].data.shape
    for _, grid in terms:
        if grid.data.shape != shape:
            raise DimensionMismatch(
                f"grid dimensions differ: {grid.data.shape[::-1]} vs {shape[::-1]}"
            )
    coeff, first = terms[0]
    acc = coeff * first.data
    for coeff, grid in terms[1:]:
        acc += coeff * grid.data
    return Grid._wrap(acc)
