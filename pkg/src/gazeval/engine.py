"""Compose saliency, cost, and exploration into history-dependent value maps.

V = w0*S + w1*C + w2*E, recomputed after every gaze shift. Two boundary
rules: with no history the value map IS the saliency map (first fixations
are chosen from saliency alone), and with a single fixation the cost term
treats the image center as the previous fixation (gaze rested there before
image onset).
"""

from __future__ import annotations

from dataclasses import dataclass

from .cost import cost_map
from .dataio import CostProfile, ModelParams
from .errors import InsufficientHistory, OutOfBoundsFixation
from .exploration import ExplorationParams, exploration_map
from .grid import Grid, PixelCoord, argmax, lincomb


def center_prior(width: int, height: int) -> PixelCoord:
    """Pre-onset fixation location: the exact image center."""
    return PixelCoord((width - 1) / 2.0, (height - 1) / 2.0)


@dataclass(frozen=True)
class PredictionContext:
    """Everything the one-step policy sees: image, gaze history, parameters."""

    saliency: Grid
    history: tuple[PixelCoord, ...]
    params: ModelParams
    profile: CostProfile

    def __post_init__(self):
        object.__setattr__(self, "history", tuple(self.history))
        w, h = self.saliency.width, self.saliency.height
        for p in self.history:
            if not p.inside(w, h):
                raise OutOfBoundsFixation(
                    f"history fixation ({p.x}, {p.y}) outside {w}x{h} saliency grid"
                )

    def extended(self, fix: PixelCoord) -> "PredictionContext":
        return PredictionContext(
            self.saliency, self.history + (fix,), self.params, self.profile
        )


@dataclass(frozen=True)
class ComponentMaps:
    saliency: Grid
    cost: Grid
    exploration: Grid
    value: Grid


def component_maps(ctx: PredictionContext) -> ComponentMaps:
    """All four maps of the composition, at working resolution."""
    s = ctx.saliency
    w, h = s.width, s.height
    if not ctx.history:
        zero = Grid.filled(w, h, 0.0)
        return ComponentMaps(s, zero, zero, Grid(s.data.copy()))
    x_t = ctx.history[-1]
    x_prev = ctx.history[-2] if len(ctx.history) >= 2 else center_prior(w, h)
    c = cost_map(w, h, x_prev, x_t, ctx.profile)
    e = exploration_map(
        w,
        h,
        ctx.history,
        ExplorationParams(ctx.params.phis, ctx.params.sigma, ctx.params.phi_indexing),
    )
    p = ctx.params
    v = lincomb([(p.w0, s), (p.w1, c), (p.w2, e)])
    return ComponentMaps(s, c, e, v)


def value_map(ctx: PredictionContext) -> Grid:
    return component_maps(ctx).value


def predict_next(ctx: PredictionContext) -> PixelCoord:
    """Greedy policy: argmax of the value map, row-major tie-break."""
    return argmax(value_map(ctx))


def nstep_context(
    saliency: Grid,
    scanpath,
    target_index: int,
    n: int,
    mode: str,
    params: ModelParams,
    profile: CostProfile,
) -> PredictionContext:
    """Context whose value map scores scanpath[target_index] n steps ahead.

    target_index is 0-based. In truncate mode the history is simply the
    real fixations up to n before the target and the map is held static;
    in rollout mode the same truncated history is extended by predict_next
    n-1 times before scoring.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if mode not in ("truncate", "rollout"):
        raise ValueError(f"mode must be 'truncate' or 'rollout', got {mode!r}")
    scanpath = list(scanpath)
    if not 0 <= target_index < len(scanpath):
        raise InsufficientHistory(
            f"target index {target_index} outside scanpath of length {len(scanpath)}"
        )
    keep = target_index - (n - 1)
    if keep < 0:
        raise InsufficientHistory(
            f"{n}-step prediction of fixation {target_index + 1} needs "
            f"{n - 1} fixations before it"
        )
    ctx = PredictionContext(saliency, tuple(scanpath[:keep]), params, profile)
    if mode == "rollout":
        for _ in range(n - 1):
            ctx = ctx.extended(predict_next(ctx))
    return ctx
