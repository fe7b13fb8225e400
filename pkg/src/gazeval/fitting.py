"""Parameter estimation: maximize mean one-step NSS over sampled fixations.

The objective is the negated mean NSS of the value map at each sample's
target fixation, minimized by a box-constrained limited-memory quasi-Newton
method with forward finite-difference gradients. The parameter vector is
either (w1, w2, sigma, phi_1..phi_K) or just (w1, w2, sigma) with phis
frozen at their configured values; w0 stays pinned to 1.

The prepared objective trades memory for speed: cost-map rows are fixed
per sample and cached, and the exploration term is factored through a
distance table over the unique fixation points so each evaluation costs
one exp pass plus a sparse gather.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.optimize
import scipy.sparse

from .cost import cost_map
from .dataio import (
    DatasetManifest,
    ModelParams,
    params_from_dict,
    params_to_dict,
    rescale_to_working,
    parse_scanpaths,
)
from .engine import center_prior
from .errors import (
    DecodeError,
    EmptyDataset,
    LineSearchFailure,
    NonFiniteObjective,
    SchemaViolation,
)
from .grid import Grid, PixelCoord
from .metrics import fixation_pixel
from .presets import default_cost_profile

log = logging.getLogger(__name__)

TARGET_POSITIONS = range(3, 12)  # eligible target ordinals for the sampler


@dataclass(frozen=True)
class TrainingSample:
    image_id: str
    history: tuple[PixelCoord, ...]
    target: PixelCoord
    subject_id: str = ""
    position: int = 0  # 1-based ordinal of the target, 0 = unknown


def default_init() -> ModelParams:
    return ModelParams(w1=0.1, w2=0.5, sigma=20.0, phis=(1.0,) * 10)


@dataclass(frozen=True)
class FitConfig:
    """Sampling, encoding, and optimizer hyperparameters for one fit."""

    sample_count: int = 10000
    seed: int = 0
    free_phis: bool = True
    init: ModelParams = field(default_factory=default_init)
    w1_bounds: tuple[float, float] = (-100.0, 100.0)
    w2_bounds: tuple[float, float] = (-100.0, 100.0)
    sigma_bounds: tuple[float, float] = (0.5, 500.0)
    phi_bounds: tuple[float, float] = (-100.0, 100.0)
    m_cor: int = 10
    ftol: float = 1e-7
    pgtol: float = 1e-5
    eps: float = 1e-8
    maxfun: int = 15000
    maxiter: int = 15000
    maxls: int = 20

    def __post_init__(self):
        if self.sigma_bounds[0] <= 0:
            raise SchemaViolation("sigma lower bound must be > 0")

    def bound_list(self) -> list[tuple[float, float]]:
        out = [self.w1_bounds, self.w2_bounds, self.sigma_bounds]
        if self.free_phis:
            out.extend([self.phi_bounds] * len(self.init.phis))
        return out


_BOUND_KEYS = {"w1": "w1_bounds", "w2": "w2_bounds", "sigma": "sigma_bounds", "phis": "phi_bounds"}


def fit_config_from_dict(doc) -> FitConfig:
    if not isinstance(doc, dict):
        raise SchemaViolation("fit config must be a JSON object")
    kwargs = {}
    scalar_keys = (
        "sample_count", "seed", "free_phis", "m_cor", "ftol", "pgtol",
        "eps", "maxfun", "maxiter", "maxls",
    )
    allowed = set(scalar_keys) | {"init", "bounds"}
    unknown = set(doc) - allowed
    if unknown:
        raise SchemaViolation(f"unknown fit config keys: {sorted(unknown)}")
    for key in scalar_keys:
        if key in doc:
            kwargs[key] = doc[key]
    if "init" in doc:
        kwargs["init"] = params_from_dict(doc["init"])
    for name, interval in (doc.get("bounds") or {}).items():
        if name not in _BOUND_KEYS:
            raise SchemaViolation(f"unknown bounds key {name!r}")
        if not (isinstance(interval, list) and len(interval) == 2):
            raise SchemaViolation(f"bounds[{name!r}] must be [lo, hi]")
        kwargs[_BOUND_KEYS[name]] = (float(interval[0]), float(interval[1]))
    return FitConfig(**kwargs)


def fit_config_to_dict(cfg: FitConfig) -> dict:
    return {
        "sample_count": cfg.sample_count,
        "seed": cfg.seed,
        "free_phis": cfg.free_phis,
        "init": params_to_dict(cfg.init),
        "bounds": {
            "w1": list(cfg.w1_bounds),
            "w2": list(cfg.w2_bounds),
            "sigma": list(cfg.sigma_bounds),
            "phis": list(cfg.phi_bounds),
        },
        "m_cor": cfg.m_cor,
        "ftol": cfg.ftol,
        "pgtol": cfg.pgtol,
        "eps": cfg.eps,
        "maxfun": cfg.maxfun,
        "maxiter": cfg.maxiter,
        "maxls": cfg.maxls,
    }


@dataclass(frozen=True)
class FitResult:
    params: ModelParams
    objective_trace: tuple[tuple[int, float], ...]  # (iteration, objective)
    evaluations: int  # objective evaluations incl. finite-difference probes
    converged_by: str  # ftol | pgtol | maxiter
    config: FitConfig | None = None


# ---------------------------------------------------------------------------
# Parameter vector encoding
# ---------------------------------------------------------------------------

def encode_theta(params: ModelParams, free_phis: bool) -> np.ndarray:
    head = [params.w1, params.w2, params.sigma]
    if free_phis:
        head.extend(params.phis)
    return np.asarray(head, dtype=np.float64)


def decode_theta(theta, base: ModelParams, free_phis: bool) -> ModelParams:
    theta = np.asarray(theta, dtype=np.float64)
    expected = 3 + len(base.phis) if free_phis else 3
    if theta.shape != (expected,):
        raise DecodeError(f"parameter vector has shape {theta.shape}, expected ({expected},)")
    if not np.all(np.isfinite(theta)):
        raise DecodeError("parameter vector contains non-finite entries")
    phis = tuple(theta[3:]) if free_phis else base.phis
    return ModelParams(
        w1=float(theta[0]),
        w2=float(theta[1]),
        sigma=float(theta[2]),
        phis=phis,
        w0=1.0,
        phi_indexing=base.phi_indexing,
    )


# ---------------------------------------------------------------------------
# Training-set sampling
# ---------------------------------------------------------------------------

def enumerate_eligible(manifest: DatasetManifest) -> list[TrainingSample]:
    """Every (scanpath, target position in 3..11) pair, deterministic order."""
    out: list[TrainingSample] = []
    bounds = {
        e.image_id: (e.image_width, e.image_height) for e in manifest.entries
    }
    for entry in sorted(manifest.entries, key=lambda e: e.image_id):
        groups = parse_scanpaths(entry.scanpath_source, bounds=bounds)
        ww, wh = manifest.working_dims(entry)
        for (image_id, subject_id), records in groups.items():
            if image_id != entry.image_id:
                continue
            pts = rescale_to_working(records, manifest.downscale_factor, ww, wh)
            for pos in TARGET_POSITIONS:
                if pos > len(pts):
                    break
                out.append(
                    TrainingSample(
                        image_id=image_id,
                        history=tuple(pts[: pos - 1]),
                        target=pts[pos - 1],
                        subject_id=subject_id,
                        position=pos,
                    )
                )
    return out


def sample_training_set(manifest: DatasetManifest, config: FitConfig) -> list[TrainingSample]:
    """Uniform draw without replacement, deterministic under config.seed."""
    eligible = enumerate_eligible(manifest)
    if not eligible:
        raise EmptyDataset("no eligible training fixations in dataset")
    rng = np.random.default_rng(config.seed)
    if len(eligible) <= config.sample_count:
        if len(eligible) < config.sample_count:
            log.warning(
                "dataset yields %d eligible fixations, fewer than the %d requested",
                len(eligible), config.sample_count,
            )
        order = rng.permutation(len(eligible))
        return [eligible[i] for i in order]
    idx = rng.choice(len(eligible), size=config.sample_count, replace=False)
    return [eligible[i] for i in idx]


# ---------------------------------------------------------------------------
# Objective
# ---------------------------------------------------------------------------

_COST_CACHE_BYTES = 600_000_000
_DIST_CACHE_BYTES = 600_000_000
_CHUNK = 1024


class _DimGroup:
    """Per-(width, height) caches: everything theta-independent."""

    def __init__(self, width, height, samples, saliency, profile, base):
        self.width, self.height = width, height
        npix = width * height
        n = len(samples)

        img_ids: list[str] = []
        img_pos: dict[str, int] = {}
        for s in samples:
            if s.image_id not in img_pos:
                img_pos[s.image_id] = len(img_ids)
                img_ids.append(s.image_id)
        self.s_stack = np.stack([saliency[i].data.ravel() for i in img_ids])
        self.img_idx = np.asarray([img_pos[s.image_id] for s in samples], dtype=np.intp)

        grid_probe = saliency[img_ids[0]]
        self.tgt_idx = np.asarray(
            [
                r * width + c
                for r, c in (fixation_pixel(grid_probe, s.target) for s in samples)
            ],
            dtype=np.intp,
        )

        # Fixed cost rows: the cost map depends only on the last two fixations.
        dtype = np.float64 if n * npix * 8 <= _COST_CACHE_BYTES else np.float32
        if dtype is np.float32:
            log.warning("cost cache falls back to float32 (%d samples)", n)
        self.c_rows = np.zeros((n, npix), dtype=dtype)
        prior = center_prior(width, height)
        for i, s in enumerate(samples):
            if not s.history:
                continue
            x_t = s.history[-1]
            x_prev = s.history[-2] if len(s.history) >= 2 else prior
            self.c_rows[i] = cost_map(width, height, x_prev, x_t, profile).data.ravel()

        # Distance table over unique history points for the exploration term.
        upos: dict[tuple[float, float], int] = {}
        for s in samples:
            for p in s.history:
                upos.setdefault((p.x, p.y), len(upos))
        self.n_unique = len(upos)
        self.dist2 = None
        if upos and len(upos) * npix * 8 <= _DIST_CACHE_BYTES:
            pts = np.asarray(list(upos.keys()))
            px = np.tile(np.arange(width, dtype=np.float64), height)
            py = np.repeat(np.arange(height, dtype=np.float64), width)
            self.dist2 = (px[None, :] - pts[:, 0:1]) ** 2 + (py[None, :] - pts[:, 1:2]) ** 2
        elif upos:
            log.warning(
                "distance cache too large (%d unique points); exploration term "
                "recomputed per evaluation", len(upos),
            )

        # Lag-selector matrices: A[k][i, u] counts history points of sample i
        # whose (clamped) weight index is k.
        k_levels = len(base.phis)
        rows: list[list[int]] = [[] for _ in range(k_levels)]
        cols: list[list[int]] = [[] for _ in range(k_levels)]
        self.samples = samples
        for i, s in enumerate(samples):
            t = len(s.history) - 1
            for j, p in enumerate(s.history):
                k = t - j if base.phi_indexing == "lag" else j
                k = min(k, k_levels - 1)
                rows[k].append(i)
                cols[k].append(upos[(p.x, p.y)])
        ncols = max(self.n_unique, 1)
        self.selectors = [
            scipy.sparse.coo_matrix(
                (np.ones(len(rows[k])), (rows[k], cols[k])), shape=(n, ncols)
            ).tocsr()
            for k in range(k_levels)
        ]

    def nss_sum(self, params: ModelParams) -> float:
        n, npix = len(self.samples), self.width * self.height
        inv_norm = 1.0 / (2.0 * np.pi * params.sigma * params.sigma)
        kmat = None
        if self.dist2 is not None:
            kmat = np.exp(self.dist2 * (-0.5 / (params.sigma * params.sigma))) * inv_norm
        weights = scipy.sparse.csr_matrix(self.selectors[0].shape)
        for phi, sel in zip(params.phis, self.selectors):
            if phi != 0.0:
                weights = weights + phi * sel

        total = 0.0
        for lo in range(0, n, _CHUNK):
            hi = min(lo + _CHUNK, n)
            v = params.w0 * self.s_stack[self.img_idx[lo:hi]]
            if params.w1 != 0.0:
                v += params.w1 * self.c_rows[lo:hi]
            if params.w2 != 0.0 and self.n_unique > 0:
                if kmat is not None:
                    v += params.w2 * (weights[lo:hi] @ kmat)
                else:
                    v += params.w2 * self._explore_rows(lo, hi, params, inv_norm)
            mu = v.mean(axis=1)
            sq = np.einsum("ij,ij->i", v, v) / npix
            var = sq - mu * mu
            v_t = v[np.arange(hi - lo), self.tgt_idx[lo:hi]]
            sd = np.sqrt(np.maximum(var, 0.0))
            with np.errstate(invalid="ignore", divide="ignore"):
                nss = np.where(sd > 0.0, (v_t - mu) / np.where(sd > 0, sd, 1.0), 0.0)
            total += float(nss.sum())
        return total

    def _explore_rows(self, lo, hi, params, inv_norm):
        # fallback path when the distance table would not fit in memory
        out = np.zeros((hi - lo, self.width * self.height))
        px = np.tile(np.arange(self.width, dtype=np.float64), self.height)
        py = np.repeat(np.arange(self.height, dtype=np.float64), self.width)
        k_last = len(params.phis) - 1
        for i in range(lo, hi):
            s = self.samples[i]
            t = len(s.history) - 1
            for j, p in enumerate(s.history):
                k = min(t - j if params.phi_indexing == "lag" else j, k_last)
                d2 = (px - p.x) ** 2 + (py - p.y) ** 2
                out[i - lo] += params.phis[k] * np.exp(
                    d2 * (-0.5 / (params.sigma * params.sigma))
                )
        return out * inv_norm


class PreparedObjective:
    """Callable negated-mean-NSS objective with theta-independent caches."""

    def __init__(self, samples, saliency, profile, base: ModelParams, free_phis: bool):
        if not samples:
            raise EmptyDataset("objective needs at least one sample")
        self.base = base
        self.free_phis = free_phis
        self.n = len(samples)
        by_dims: dict[tuple[int, int], list[TrainingSample]] = {}
        for s in samples:
            g = saliency[s.image_id]
            by_dims.setdefault((g.width, g.height), []).append(s)
        self.groups = [
            _DimGroup(w, h, group, saliency, profile, base)
            for (w, h), group in by_dims.items()
        ]

    def __call__(self, theta) -> float:
        params = decode_theta(theta, self.base, self.free_phis)
        total = sum(g.nss_sum(params) for g in self.groups)
        value = -total / self.n
        if not np.isfinite(value):
            raise NonFiniteObjective(f"objective is {value} at theta {theta}")
        return value


def objective(theta, samples, saliency, profile, base=None, free_phis=True) -> float:
    """One-shot negated mean NSS; see PreparedObjective for repeated use."""
    base = base if base is not None else default_init()
    return PreparedObjective(samples, saliency, profile, base, free_phis)(theta)


# ---------------------------------------------------------------------------
# Finite differences and the bounded minimizer
# ---------------------------------------------------------------------------

def finite_diff_gradient(f, theta, eps: float, bounds=None, f0=None) -> np.ndarray:
    """Forward differences, switching to backward at an active upper bound."""
    theta = np.asarray(theta, dtype=np.float64)
    if f0 is None:
        f0 = f(theta)
    if not np.isfinite(f0):
        raise NonFiniteObjective(f"objective is {f0} at the expansion point")
    g = np.zeros_like(theta)
    for i in range(theta.size):
        step = eps
        if bounds is not None and theta[i] + eps > bounds[i][1]:
            step = -eps
        probe = theta.copy()
        probe[i] += step
        fi = f(probe)
        if not np.isfinite(fi):
            raise NonFiniteObjective(f"objective is {fi} perturbing coordinate {i}")
        g[i] = (fi - f0) / step
    return g


@dataclass(frozen=True)
class OptimizeOutcome:
    x: np.ndarray
    fun: float
    trace: tuple[tuple[int, float], ...]
    evaluations: int
    converged_by: str


def minimize_bounded(f, x0, bounds, config: FitConfig) -> OptimizeOutcome:
    """Box-constrained limited-memory quasi-Newton with finite-diff gradients.

    Wraps the objective with memoization so the iterate trace can be read
    back without extra evaluations; evaluation count is distinct points.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    cache: dict[bytes, float] = {}
    best: list = [None, np.inf]
    calls = [0]

    def wrapped(theta):
        theta = np.asarray(theta, dtype=np.float64)
        key = theta.tobytes()
        if key in cache:
            return cache[key]
        v = float(f(theta))
        if not np.isfinite(v):
            raise NonFiniteObjective(f"objective is {v}")
        calls[0] += 1
        cache[key] = v
        if v < best[1]:
            best[0], best[1] = theta.copy(), v
        return v

    def fun_grad(theta):
        v = wrapped(theta)
        return v, finite_diff_gradient(wrapped, theta, config.eps, bounds=bounds, f0=v)

    trace: list[tuple[int, float]] = [(0, wrapped(x0))]

    def callback(xk):
        trace.append((len(trace), wrapped(np.asarray(xk))))

    res = scipy.optimize.minimize(
        fun_grad,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        callback=callback,
        options={
            "maxcor": config.m_cor,
            "ftol": config.ftol * np.finfo(np.float64).eps,
            "gtol": config.pgtol,
            "eps": config.eps,
            "maxfun": config.maxfun,
            "maxiter": config.maxiter,
            "maxls": config.maxls,
        },
    )
    message = res.message if isinstance(res.message, str) else res.message.decode()
    outcome = OptimizeOutcome(
        x=np.asarray(res.x, dtype=np.float64),
        fun=float(res.fun),
        trace=tuple(trace),
        evaluations=calls[0],
        converged_by="",
    )
    if res.status == 2 or "ABNORMAL" in message.upper() or "LNSRCH" in message.upper():
        err = LineSearchFailure(f"optimizer stopped abnormally: {message}")
        err.result = OptimizeOutcome(
            x=best[0] if best[0] is not None else x0,
            fun=best[1],
            trace=tuple(trace),
            evaluations=calls[0],
            converged_by="maxiter",
        )
        raise err
    if res.status == 1:
        reason = "maxiter"
    elif "PGTOL" in message.upper() or "PROJ" in message.upper():
        reason = "pgtol"
    else:
        reason = "ftol"
    return OptimizeOutcome(
        x=outcome.x,
        fun=outcome.fun,
        trace=outcome.trace,
        evaluations=outcome.evaluations,
        converged_by=reason,
    )


# ---------------------------------------------------------------------------
# End-to-end fit
# ---------------------------------------------------------------------------

def load_training_saliency(manifest: DatasetManifest, samples) -> dict[str, Grid]:
    needed = {s.image_id for s in samples}
    return {
        e.image_id: manifest.load_saliency(e)
        for e in manifest.entries
        if e.image_id in needed
    }


def fit(manifest: DatasetManifest, config: FitConfig, profile=None) -> FitResult:
    """Sample a training set from the manifest and estimate parameters."""
    profile = profile if profile is not None else default_cost_profile()
    samples = sample_training_set(manifest, config)
    saliency = load_training_saliency(manifest, samples)
    prepared = PreparedObjective(samples, saliency, profile, config.init, config.free_phis)
    x0 = encode_theta(config.init, config.free_phis)
    try:
        outcome = minimize_bounded(prepared, x0, config.bound_list(), config)
    except LineSearchFailure as err:
        partial: OptimizeOutcome = err.result
        err.result = FitResult(
            params=decode_theta(partial.x, config.init, config.free_phis),
            objective_trace=partial.trace,
            evaluations=partial.evaluations,
            converged_by=partial.converged_by,
            config=config,
        )
        raise
    return FitResult(
        params=decode_theta(outcome.x, config.init, config.free_phis),
        objective_trace=outcome.trace,
        evaluations=outcome.evaluations,
        converged_by=outcome.converged_by,
        config=config,
    )


def average_phis(models: list[ModelParams], weighted: bool = True) -> tuple[float, ...]:
    """Combine per-model exploration weights into one shared vector.

    weighted=True averages the phi vectors weighted by each model's w2;
    weighted=False takes the plain mean of the w2*phi products. Both
    recipes circulate for this purpose, so both are provided.
    """
    if not models:
        raise EmptyDataset("average_phis needs at least one model")
    k = len(models[0].phis)
    if any(len(m.phis) != k for m in models):
        raise SchemaViolation("models must share the phi vector length")
    prods = np.asarray([[m.w2 * p for p in m.phis] for m in models])
    if weighted:
        w2s = np.asarray([m.w2 for m in models])
        return tuple(prods.sum(axis=0) / w2s.sum())
    return tuple(prods.mean(axis=0))
