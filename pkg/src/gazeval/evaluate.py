"""Dataset-level scoring: n-step-ahead NSS/AUC with a saliency-only baseline.

Every eligible target fixation in every scanpath is scored twice: once
against the history-dependent value map (model columns) and once against
the raw saliency map (baseline columns). Per-ordinal-position means cover
positions 1..10; the aggregate means cover every scored sample. Samples
whose map is constant cannot be standardized and are excluded from both
sides, with the count reported.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .dataio import (
    CostProfile,
    DatasetManifest,
    ModelParams,
    dump_json,
    format_float,
    params_to_dict,
    parse_scanpaths,
    profile_to_dict,
    rescale_to_working,
)
from .engine import nstep_context, value_map
from .errors import ConstantMap, EmptyDataset, MismatchedConfig, SchemaViolation
from .grid import standardize
from .metrics import ScoreSample, auc_at, fixation_pixel, nss_at

log = logging.getLogger(__name__)

MAX_BREAKDOWN_POSITION = 10


@dataclass(frozen=True)
class PositionStats:
    position: int
    mean_nss: float
    delta_nss: float  # model minus baseline at this position
    count: int


@dataclass(frozen=True)
class EvalReport:
    dataset_id: str
    model_id: str
    step_n: int
    mode: str
    mean_nss: float
    mean_auc: float
    baseline_nss: float
    baseline_auc: float
    excluded: int
    per_position: tuple[PositionStats, ...]
    sample_count: int
    config_fingerprint: str


def config_fingerprint(
    params: ModelParams, profile: CostProfile, manifest: DatasetManifest, n: int, mode: str
) -> str:
    doc = {
        "params": params_to_dict(params),
        "profile": profile_to_dict(profile),
        "manifest_digest": manifest.digest,
        "step_n": n,
        "mode": mode,
    }
    return hashlib.sha256(dump_json(doc).encode("utf-8")).hexdigest()


def eligible_positions(scanpath_len: int, n: int):
    """Target ordinals scored for n-step prediction.

    One-step scores every fixation (the first against pure saliency, the
    second with the center-prior cost map); for n >= 2 the truncated
    history must keep at least one real fixation, so targets start at n+1.
    """
    first = 1 if n == 1 else n + 1
    return range(first, scanpath_len + 1)


def _score_entry(manifest, entry, params, profile, n, mode):
    """Score every scanpath of one image; returns (model, baseline, excluded)."""
    sal = manifest.load_saliency(entry)
    ww, wh = manifest.working_dims(entry)
    bounds = {entry.image_id: (entry.image_width, entry.image_height)}
    groups = parse_scanpaths(entry.scanpath_source, bounds=bounds)

    try:
        base_z = standardize(sal)
    except ConstantMap:
        total = sum(
            len(eligible_positions(len(recs), n))
            for (img, _), recs in groups.items()
            if img == entry.image_id
        )
        return [], [], total

    model_rows: list[ScoreSample] = []
    base_rows: list[ScoreSample] = []
    excluded = 0
    for (image_id, subject_id), records in sorted(groups.items()):
        if image_id != entry.image_id:
            continue
        pts = rescale_to_working(records, manifest.downscale_factor, ww, wh)
        for pos in eligible_positions(len(pts), n):
            target = pts[pos - 1]
            ctx = nstep_context(sal, pts, pos - 1, n, mode, params, profile)
            vmap = value_map(ctx)
            try:
                m_nss = nss_at(vmap, target)
            except ConstantMap:
                excluded += 1
                continue
            m_auc = auc_at(vmap, target)
            row, col = fixation_pixel(sal, target)
            model_rows.append(
                ScoreSample(image_id, subject_id, pos, m_nss, m_auc)
            )
            base_rows.append(
                ScoreSample(
                    image_id,
                    subject_id,
                    pos,
                    float(base_z.data[row, col]),
                    auc_at(sal, target),
                )
            )
    return model_rows, base_rows, excluded


def collect_samples(
    manifest: DatasetManifest,
    params: ModelParams,
    profile: CostProfile,
    n: int = 1,
    mode: str = "truncate",
    threads: int | None = None,
):
    """Paired (model, baseline) ScoreSamples over the whole dataset."""
    entries = sorted(manifest.entries, key=lambda e: e.image_id)
    workers = threads if threads and threads > 0 else (os.cpu_count() or 1)

    def job(entry):
        return _score_entry(manifest, entry, params, profile, n, mode)

    if workers == 1:
        results = [job(e) for e in entries]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, entries))

    model: list[ScoreSample] = []
    baseline: list[ScoreSample] = []
    excluded = 0
    for m, b, x in results:  # deterministic: entry order, not completion order
        model.extend(m)
        baseline.extend(b)
        excluded += x
    return model, baseline, excluded


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values)


def evaluate(
    manifest: DatasetManifest,
    params: ModelParams,
    profile: CostProfile,
    n: int = 1,
    mode: str = "truncate",
    model_id: str = "model",
    threads: int | None = None,
) -> EvalReport:
    if n > 3:
        log.warning(
            "n=%d is beyond the validated 1..3 range; treat results as experimental", n
        )
    model, baseline, excluded = collect_samples(manifest, params, profile, n, mode, threads)
    if not model:
        raise EmptyDataset("no scorable fixations in dataset")

    per_position = []
    for pos in range(1, MAX_BREAKDOWN_POSITION + 1):
        m = [s.nss for s in model if s.ordinal_position == pos]
        if not m:
            continue
        b = [s.nss for s in baseline if s.ordinal_position == pos]
        per_position.append(
            PositionStats(pos, _mean(m), _mean(m) - _mean(b), len(m))
        )

    return EvalReport(
        dataset_id=manifest.dataset_id,
        model_id=model_id,
        step_n=n,
        mode=mode,
        mean_nss=_mean(s.nss for s in model),
        mean_auc=_mean(s.auc for s in model),
        baseline_nss=_mean(s.nss for s in baseline),
        baseline_auc=_mean(s.auc for s in baseline),
        excluded=excluded,
        per_position=tuple(per_position),
        sample_count=len(model),
        config_fingerprint=config_fingerprint(params, profile, manifest, n, mode),
    )


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------

def report_to_dict(r: EvalReport) -> dict:
    return {
        "dataset_id": r.dataset_id,
        "model_id": r.model_id,
        "step_n": r.step_n,
        "mode": r.mode,
        "mean_nss": r.mean_nss,
        "mean_auc": r.mean_auc,
        "baseline_nss": r.baseline_nss,
        "baseline_auc": r.baseline_auc,
        "excluded": r.excluded,
        "per_position": [
            {
                "position": p.position,
                "mean_nss": p.mean_nss,
                "delta_nss": p.delta_nss,
                "count": p.count,
            }
            for p in r.per_position
        ],
        "sample_count": r.sample_count,
        "config_fingerprint": r.config_fingerprint,
    }


def report_from_dict(doc) -> EvalReport:
    try:
        per_position = tuple(
            PositionStats(
                int(p["position"]), float(p["mean_nss"]), float(p["delta_nss"]), int(p["count"])
            )
            for p in doc["per_position"]
        )
        return EvalReport(
            dataset_id=str(doc["dataset_id"]),
            model_id=str(doc["model_id"]),
            step_n=int(doc["step_n"]),
            mode=str(doc["mode"]),
            mean_nss=float(doc["mean_nss"]),
            mean_auc=float(doc["mean_auc"]),
            baseline_nss=float(doc["baseline_nss"]),
            baseline_auc=float(doc["baseline_auc"]),
            excluded=int(doc["excluded"]),
            per_position=per_position,
            sample_count=int(doc["sample_count"]),
            config_fingerprint=str(doc["config_fingerprint"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation(f"malformed report: {exc}") from exc


def write_report(r: EvalReport, path) -> None:
    Path(path).write_text(dump_json(report_to_dict(r)), encoding="utf-8")


def load_report(path) -> EvalReport:
    try:
        return report_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"report file {path} is not valid JSON") from exc


def baseline_view(r: EvalReport) -> EvalReport:
    """The same report with model columns replaced by the baseline columns."""
    return EvalReport(
        dataset_id=r.dataset_id,
        model_id=f"{r.model_id}:baseline",
        step_n=r.step_n,
        mode=r.mode,
        mean_nss=r.baseline_nss,
        mean_auc=r.baseline_auc,
        baseline_nss=r.baseline_nss,
        baseline_auc=r.baseline_auc,
        excluded=r.excluded,
        per_position=tuple(
            PositionStats(p.position, p.mean_nss - p.delta_nss, 0.0, p.count)
            for p in r.per_position
        ),
        sample_count=r.sample_count,
        config_fingerprint=r.config_fingerprint,
    )


def compare(a: EvalReport, b: EvalReport) -> dict:
    """Aggregate and per-position deltas (a minus b)."""
    if (a.dataset_id, a.step_n, a.mode) != (b.dataset_id, b.step_n, b.mode):
        raise MismatchedConfig(
            f"cannot compare ({a.dataset_id}, n={a.step_n}, {a.mode}) "
            f"with ({b.dataset_id}, n={b.step_n}, {b.mode})"
        )
    b_by_pos = {p.position: p for p in b.per_position}
    rows = []
    for p in a.per_position:
        if p.position in b_by_pos:
            rows.append(
                {
                    "position": p.position,
                    "delta_mean_nss": p.mean_nss - b_by_pos[p.position].mean_nss,
                }
            )
    return {
        "dataset_id": a.dataset_id,
        "step_n": a.step_n,
        "mode": a.mode,
        "delta_mean_nss": a.mean_nss - b.mean_nss,
        "delta_mean_auc": a.mean_auc - b.mean_auc,
        "per_position": rows,
    }


def breakdown_csv(r: EvalReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["position", "mean_nss", "delta_nss", "count"])
    for p in r.per_position:
        w.writerow([p.position, format_float(p.mean_nss), format_float(p.delta_nss), p.count])
    return buf.getvalue()
