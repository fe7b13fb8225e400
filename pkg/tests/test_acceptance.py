"""End-to-end acceptance gate.

One test per release criterion; each prints a single [PASS]/[FAIL] line
(echoed into the terminal summary by conftest) and fails hard on any
violated bound. Oracles here are deliberately written against the scalar
definitions, independent of the vectorized library code they check.
"""

import json
import math
import time
from bisect import bisect_right
from types import SimpleNamespace

import numpy as np
import pytest

from conftest import rand_grid, rand_point
from gazeval.cli import main as cli_main
from gazeval.cost import absolute_angle, amplitude, relative_angle
from gazeval.dataio import (
    CostProfile,
    ModelParams,
    dump_json,
    load_manifest,
    params_from_dict,
    params_to_dict,
    read_raster_bytes,
    save_params,
    write_raster_bytes,
)
from gazeval.engine import PredictionContext, value_map
from gazeval.evaluate import evaluate
from gazeval.exploration import ExplorationParams, exploration_map, gaussian_at
from gazeval.fitting import (
    FitConfig,
    default_init,
    encode_theta,
    fit,
    load_training_saliency,
    minimize_bounded,
    objective,
    sample_training_set,
)
from gazeval.grid import Grid, PixelCoord
from gazeval.metrics import auc_at, nss_at
from gazeval.presets import PARAM_PRESETS, load_preset, default_cost_profile
from gazeval.synthetic import write_synthetic_dataset

CRITERIA_LOG: list[str] = []


def report(name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f": {detail}"
    CRITERIA_LOG.append(line)
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# scalar oracles
# ---------------------------------------------------------------------------

def oracle_nss(g: Grid, fix: PixelCoord) -> float:
    z = (g.data - g.data.mean()) / g.data.std()
    px = min(int(math.floor(fix.x + 0.5)), g.width - 1)
    py = min(int(math.floor(fix.y + 0.5)), g.height - 1)
    return float(z[py, px])


def oracle_auc(g: Grid, fix: PixelCoord) -> float:
    """Threshold-sweep ROC area for a single positive pixel."""
    px = min(int(math.floor(fix.x + 0.5)), g.width - 1)
    py = min(int(math.floor(fix.y + 0.5)), g.height - 1)
    flat = g.data.ravel()
    pos = flat[py * g.width + px]
    neg = np.delete(flat, py * g.width + px)
    tpr, fpr = [0.0], [0.0]
    for thr in np.unique(flat)[::-1]:
        tpr.append(1.0 if pos >= thr else 0.0)
        fpr.append(float(np.count_nonzero(neg >= thr)) / neg.size)
    return float(np.trapezoid(tpr, fpr))


def interp_clamped(x: float, xs, ys) -> float:
    if x <= xs[0]:
        return ys[0]
    if x >= xs[-1]:
        return ys[-1]
    j = bisect_right(xs, x) - 1
    t = (x - xs[j]) / (xs[j + 1] - xs[j])
    return ys[j] * (1.0 - t) + ys[j + 1] * t


def oracle_value_pixel(
    s: Grid, history, params: ModelParams, profile: CostProfile, px: int, py: int
) -> float:
    """Score one pixel directly from the component definitions."""
    val = params.w0 * s.data[py, px]
    if not history:
        return val
    cur = history[-1]
    if len(history) >= 2:
        prev = history[-2]
    else:
        prev = PixelCoord((s.width - 1) / 2.0, (s.height - 1) / 2.0)
    dx, dy = px - cur.x, py - cur.y
    amp_px = math.hypot(dx, dy)
    centers = [
        (profile.amplitude_bin_edges[i] + profile.amplitude_bin_edges[i + 1]) / 2.0
        for i in range(len(profile.amplitude_values))
    ]
    cost = interp_clamped(
        amp_px / profile.pixels_per_degree, centers, profile.amplitude_values
    )
    if amp_px > 0.0:
        ux, uy = cur.x - prev.x, cur.y - prev.y
        nu = math.hypot(ux, uy)
        if nu > 0.0:
            cosv = (dx * ux + dy * uy) / (amp_px * nu)
            cost += profile.psi1 * math.acos(min(1.0, max(-1.0, cosv)))
        cost += profile.psi2 * math.acos(min(1.0, max(-1.0, dx / amp_px)))
    val += params.w1 * cost

    t = len(history)
    explore = 0.0
    for i, p in enumerate(history, start=1):
        k = t - i if params.phi_indexing == "lag" else i - 1
        phi = params.phis[min(k, len(params.phis) - 1)]
        d2 = (px - p.x) ** 2 + (py - p.y) ** 2
        explore += phi * math.exp(-d2 / (2.0 * params.sigma**2)) / (
            2.0 * math.pi * params.sigma**2
        )
    return val + params.w2 * explore


# ---------------------------------------------------------------------------
# shared synthetic experiment data
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def recovery(tmp_path_factory):
    """2000 train + 500 held-out scanpaths self-generated by the model."""
    root = tmp_path_factory.mktemp("recovery")
    true_params = load_preset("deepgaze2")
    profile = default_cost_profile()
    t0 = time.perf_counter()
    train_path = write_synthetic_dataset(
        root,
        true_params,
        profile,
        seed=20240811,
        n_images=250,
        subjects_per_image=10,
        scanpath_length=8,
        width=64,
        height=48,
        holdout_subjects=2,
    )
    gen_seconds = time.perf_counter() - t0
    return SimpleNamespace(
        train=load_manifest(train_path),
        holdout=load_manifest(root / "manifest_holdout.json"),
        true_params=true_params,
        profile=profile,
        gen_seconds=gen_seconds,
    )


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_metric_oracle_equivalence():
    rng = np.random.default_rng(1001)
    t0 = time.perf_counter()
    worst_nss, worst_auc = 0.0, 0.0
    for trial in range(200):
        g = rand_grid(rng, 16, 16)
        if trial % 3 == 0:
            g = Grid(np.floor(g.data * 8.0) / 8.0)  # quantize to force ties
        if trial % 5 == 0:
            fix = PixelCoord(float(rng.integers(0, 16)) + 0.5, float(rng.integers(0, 16)) + 0.5)
        else:
            fix = rand_point(rng, 16, 16)
        worst_nss = max(worst_nss, abs(nss_at(g, fix) - oracle_nss(g, fix)))
        worst_auc = max(worst_auc, abs(auc_at(g, fix) - oracle_auc(g, fix)))
    elapsed = time.perf_counter() - t0
    report(
        "metric oracle equivalence",
        worst_nss <= 1e-12 and worst_auc <= 1e-9 and elapsed < 5.0,
        f"max nss err {worst_nss:.2e}, max auc err {worst_auc:.2e}, {elapsed:.2f}s",
    )


def random_profile(rng) -> CostProfile:
    n_bins = int(rng.integers(3, 7))
    edges = np.sort(rng.uniform(0.0, 40.0, size=n_bins + 1))
    edges = edges + np.arange(n_bins + 1) * 1e-6  # keep strictly ascending
    return CostProfile(
        pixels_per_degree=float(rng.uniform(0.5, 2.0)),
        amplitude_bin_edges=tuple(edges),
        amplitude_values=tuple(rng.uniform(-3.0, 2.0, size=n_bins)),
        psi1=float(rng.uniform(-1.0, 0.5)),
        psi2=float(rng.uniform(-1.0, 0.5)),
    )


def test_value_map_oracle():
    rng = np.random.default_rng(1002)
    params = load_preset("deepgaze2")
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        s = rand_grid(rng, 8, 8)
        profile = random_profile(rng)
        history = tuple(rand_point(rng, 8, 8) for _ in range(3))
        v = value_map(PredictionContext(s, history, params, profile))
        for py in range(8):
            for px in range(8):
                expect = oracle_value_pixel(s, history, params, profile, px, py)
                worst = max(worst, abs(v.data[py, px] - expect))
    elapsed = time.perf_counter() - t0
    report(
        "value map oracle",
        worst <= 1e-10 and elapsed < 5.0,
        f"max pixel err {worst:.2e}, {elapsed:.2f}s",
    )


def test_geometry_suite():
    o = PixelCoord(0.0, 0.0)
    exact = (
        amplitude(o, PixelCoord(3.0, 4.0)) == 5.0
        and relative_angle(o, PixelCoord(1.0, 0.0), PixelCoord(2.0, 0.0)) == 0.0
        and relative_angle(o, PixelCoord(1.0, 0.0), PixelCoord(0.0, 0.0)) == math.pi
        and relative_angle(o, PixelCoord(1.0, 0.0), PixelCoord(1.0, 1.0)) == math.pi / 2.0
        and absolute_angle(o, PixelCoord(3.0, 0.0)) == 0.0
        and absolute_angle(o, PixelCoord(-2.0, 0.0)) == math.pi
        and absolute_angle(o, PixelCoord(0.0, 2.0)) == math.pi / 2.0
        and absolute_angle(o, PixelCoord(2.0, -2.0)) == absolute_angle(o, PixelCoord(2.0, 2.0))
    )
    # collinear triples across magnitudes: cosine may land at 1 + ulp
    rng = np.random.default_rng(1003)
    clamped_ok = True
    for _ in range(200):
        scale = 10.0 ** rng.uniform(-8, 8)
        d = rng.normal(size=2)
        p1 = PixelCoord(d[0] * scale, d[1] * scale)
        forward = relative_angle(o, p1, PixelCoord(2.0 * p1.x, 2.0 * p1.y))
        backward = relative_angle(o, p1, o)
        clamped_ok &= math.isfinite(forward) and abs(forward) < 1e-5
        clamped_ok &= math.isfinite(backward) and abs(backward - math.pi) < 1e-5
    report("geometry suite", exact and clamped_ok)


def test_gaussian_normalization_and_linearity():
    g = gaussian_at(64, 64, PixelCoord(31.5, 31.5), 2.0)
    total = float(g.data.sum())
    mass_ok = 0.995 <= total <= 1.0001

    rng = np.random.default_rng(1004)
    worst = 0.0
    for trial in range(100):
        w, h = int(rng.integers(8, 25)), int(rng.integers(8, 25))
        sigma = float(rng.uniform(0.8, 4.0))
        history = [rand_point(rng, w, h) for _ in range(int(rng.integers(1, 6)))]
        k = int(rng.integers(1, 5))
        mode = "lag" if trial % 2 == 0 else "absolute"
        a = tuple(rng.uniform(-2.0, 2.0, size=k))
        b = tuple(rng.uniform(-2.0, 2.0, size=k))
        c = float(rng.uniform(-3.0, 3.0))
        ea = exploration_map(w, h, history, ExplorationParams(a, sigma, mode))
        eb = exploration_map(w, h, history, ExplorationParams(b, sigma, mode))
        esum = exploration_map(
            w, h, history,
            ExplorationParams(tuple(x + y for x, y in zip(a, b)), sigma, mode),
        )
        escaled = exploration_map(
            w, h, history, ExplorationParams(tuple(c * x for x in a), sigma, mode)
        )
        worst = max(worst, float(np.abs(esum.data - (ea.data + eb.data)).max()))
        worst = max(worst, float(np.abs(escaled.data - c * ea.data).max()))
    report(
        "gaussian normalization and linearity",
        mass_ok and worst <= 1e-12,
        f"mass {total:.6f}, max linearity err {worst:.2e}",
    )


EXPECTED_PRESETS = {
    "deepgaze2": (0.345, 2.893, 34.158,
                  (1.737, 2.087, 2.022, 2.462, 3.319, 3.376, 4.744, 5.219, 5.218, 4.374)),
    "sam_resnet": (0.007, 0.003, 93.337,
                   (0.410, 0.097, 0.031, 0.165, 0.201, 0.237, 0.407, 0.333, 0.952, -2.17)),
    "eml_net": (0.095, 0.481, 18.296,
                (0.155, 0.790, 0.427, 0.748, 1.081, 1.104, 1.449, -0.22, 2.553, 4.523)),
    "casnet2": (0.157, 0.851, 22.328,
                (0.580, 1.408, 1.142, 1.419, 1.930, 1.608, 2.592, 1.616, 3.185, 5.331)),
    "deepgaze2_shared_phi": (0.351, 1.989, 33.632, None),
    "sam_resnet_shared_phi": (0.110, 0.510, 26.742, None),
    "eml_net_shared_phi": (0.095, 0.619, 21.553, None),
    "casnet2_shared_phi": (0.160, 1.134, 25.961, None),
    "unisal_shared_phi": (0.061, 0.483, 12.643, None),
}
SHARED_PHI = (0.720, 1.095, 0.906, 1.198, 1.633, 1.581, 2.298, 1.737, 2.977, 3.014)


def test_parameter_io_fidelity(tmp_path):
    ok = set(PARAM_PRESETS) == set(EXPECTED_PRESETS)
    for name in PARAM_PRESETS:
        p = load_preset(name)
        w1, w2, sigma, phis = EXPECTED_PRESETS[name]
        ok &= (p.w1, p.w2, p.sigma) == (w1, w2, sigma)
        ok &= p.phis == (phis if phis is not None else SHARED_PHI)
        ok &= p.w0 == 1.0
        # serialization loop: dict -> 17-digit JSON text -> dict -> params
        again = params_from_dict(json.loads(dump_json(params_to_dict(p))))
        ok &= again == p
        save_params(p, tmp_path / f"{name}.json")
        ok &= params_from_dict(
            json.loads((tmp_path / f"{name}.json").read_text(encoding="utf-8"))
        ) == p
    report("parameter io fidelity", ok, f"{len(PARAM_PRESETS)} preset rows")


def test_optimizer_sanity():
    target = np.array([0.3, 1.2, 25.0])
    seen: list[np.ndarray] = []

    def quadratic(theta):
        seen.append(np.asarray(theta, dtype=np.float64).copy())
        d = np.asarray(theta) - target
        return float(d[0] ** 2 + 2.0 * d[1] ** 2 + d[2] ** 2)

    config = FitConfig(free_phis=False)
    bounds = config.bound_list()
    x0 = encode_theta(default_init(), free_phis=False)
    outcome = minimize_bounded(quadratic, x0, bounds, config)

    err = float(np.abs(outcome.x - target).max())
    iters = outcome.trace[-1][0]
    values = [v for _, v in outcome.trace]
    monotone = all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    in_bounds = all(
        all(lo <= x[j] <= hi for j, (lo, hi) in enumerate(bounds)) for x in seen
    )
    report(
        "optimizer sanity",
        err <= 1e-5 and iters <= 50 and monotone and in_bounds,
        f"|x - x*| {err:.2e} in {iters} iterations",
    )


def test_synthetic_recovery(recovery):
    t0 = time.perf_counter()
    config = FitConfig(maxiter=40, seed=11)
    result = fit(recovery.train, config, recovery.profile)
    fitted_obj = result.objective_trace[-1][1]

    samples = sample_training_set(recovery.train, config)
    saliency = load_training_saliency(recovery.train, samples)
    true_obj = objective(
        encode_theta(recovery.true_params, free_phis=True),
        samples,
        saliency,
        recovery.profile,
        base=recovery.true_params,
        free_phis=True,
    )

    held = evaluate(recovery.holdout, result.params, recovery.profile, n=1, threads=1)
    advantage = held.mean_nss - held.baseline_nss
    deltas = {p.position: p.delta_nss for p in held.per_position}
    positive_tail = all(deltas.get(pos, -1.0) > 0.0 for pos in range(2, 9))
    elapsed = recovery.gen_seconds + (time.perf_counter() - t0)

    report(
        "synthetic recovery",
        fitted_obj <= true_obj + 0.02 and advantage >= 0.1 and positive_tail
        and elapsed < 600.0,
        f"objective {fitted_obj:.4f} vs generator {true_obj:.4f}, "
        f"holdout advantage {advantage:.3f}, {elapsed:.0f}s",
    )


def test_nstep_degradation(recovery):
    scores = [
        evaluate(recovery.holdout, recovery.true_params, recovery.profile,
                 n=n, mode="truncate").mean_nss
        for n in (1, 2, 3)
    ]
    report(
        "n-step degradation",
        scores[0] >= scores[1] >= scores[2],
        "mean nss " + " -> ".join(f"{s:.4f}" for s in scores),
    )


def test_determinism(tmp_path):
    rng = np.random.default_rng(1009)
    payload = rng.uniform(-1e8, 1e8, size=100_000).astype(np.float32)
    g = Grid(payload.astype(np.float64).reshape(250, 400))
    round_trip = read_raster_bytes(write_raster_bytes(g))
    raster_ok = round_trip.data.astype("<f4").tobytes() == payload.tobytes()

    manifest = write_synthetic_dataset(
        tmp_path, load_preset("unisal_shared_phi"), default_cost_profile(),
        seed=7, n_images=6, subjects_per_image=2, scanpath_length=6,
        width=16, height=12,
    )
    save_params(load_preset("unisal_shared_phi"), tmp_path / "p.json")
    blobs = []
    for name in ("r1.json", "r2.json"):
        code = cli_main([
            "eval", "--manifest", str(manifest), "--params", str(tmp_path / "p.json"),
            "--report", str(tmp_path / name),
        ])
        assert code == 0
        blobs.append((tmp_path / name).read_bytes())
    fits = []
    for name in ("f1.json", "f2.json"):
        code = cli_main([
            "fit", "--manifest", str(manifest), "--out", str(tmp_path / name),
            "--samples", "12", "--seed", "99",
            "--fit-config", _tiny_fit_config(tmp_path),
        ])
        assert code == 0
        fits.append((tmp_path / name).read_bytes())
    report(
        "determinism",
        raster_ok and blobs[0] == blobs[1] and fits[0] == fits[1],
        "raster bit-exact, repeated eval and seeded fit byte-identical",
    )


def _tiny_fit_config(tmp_path) -> str:
    path = tmp_path / "fitcfg.json"
    path.write_text(json.dumps({"maxiter": 3}), encoding="utf-8")
    return str(path)


def test_performance(recovery):
    params = recovery.true_params
    profile = recovery.profile
    rng = np.random.default_rng(1010)
    s = rand_grid(rng, 128, 128)
    history = tuple(rand_point(rng, 128, 128) for _ in range(10))
    ctx = PredictionContext(s, history, params, profile)
    value_map(ctx)  # warm
    best = math.inf
    for _ in range(3):
        t0 = time.perf_counter()
        value_map(ctx)
        best = min(best, time.perf_counter() - t0)

    t0 = time.perf_counter()
    evaluate(recovery.train, params, profile, n=1)
    eval_elapsed = time.perf_counter() - t0
    report(
        "performance",
        best < 0.050 and eval_elapsed < 60.0,
        f"value map {best * 1000:.1f}ms, 2000-scanpath eval {eval_elapsed:.1f}s",
    )
