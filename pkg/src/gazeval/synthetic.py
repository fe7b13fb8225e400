"""Self-generated datasets: scanpaths sampled from the model itself.

Used for recovery and degradation experiments where ground truth must be
known by construction. Saliency grids are random mixtures of Gaussian
blobs; scanpaths are drawn by softmax-sampling the value map under a known
parameter set, with the same boundary conventions the engine applies when
scoring (first fixation from saliency alone, center prior before the
second).
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .dataio import CostProfile, ModelParams, dump_json, write_raster
from .engine import PredictionContext, value_map
from .grid import Grid, PixelCoord


def blob_saliency(width: int, height: int, rng: np.random.Generator) -> Grid:
    """Random mixture of 4-8 unnormalized Gaussian blobs on a small floor."""
    xs = np.arange(width, dtype=np.float64)[None, :]
    ys = np.arange(height, dtype=np.float64)[:, None]
    acc = np.full((height, width), 0.05)
    for _ in range(int(rng.integers(4, 9))):
        cx = rng.uniform(0, width - 1)
        cy = rng.uniform(0, height - 1)
        amp = rng.uniform(0.5, 1.5)
        s = rng.uniform(2.0, 6.0)
        acc += amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2.0 * s * s))
    return Grid(acc)


def softmax_sample(g: Grid, rng: np.random.Generator, temperature: float) -> PixelCoord:
    """Draw an integer pixel with probability proportional to exp(g / T)."""
    z = g.data / temperature
    z = z - z.max()  # shift for overflow safety; softmax is shift-invariant
    p = np.exp(z).ravel()
    flat = int(rng.choice(p.size, p=p / p.sum()))
    row, col = divmod(flat, g.width)
    return PixelCoord(float(col), float(row))


def sample_scanpath(
    saliency: Grid,
    length: int,
    params: ModelParams,
    profile: CostProfile,
    rng: np.random.Generator,
    temperature: float = 0.25,
) -> list[PixelCoord]:
    """Roll out one scanpath by softmax-sampling successive value maps."""
    pts: list[PixelCoord] = []
    for _ in range(length):
        ctx = PredictionContext(saliency, tuple(pts), params, profile)
        pts.append(softmax_sample(value_map(ctx), rng, temperature))
    return pts


def write_synthetic_dataset(
    root,
    params: ModelParams,
    profile: CostProfile,
    seed: int,
    n_images: int = 250,
    subjects_per_image: int = 8,
    scanpath_length: int = 8,
    width: int = 64,
    height: int = 48,
    temperature: float = 0.25,
    holdout_subjects: int = 0,
) -> Path:
    """Generate rasters + scanpath CSVs + manifest under ``root``.

    Returns the manifest path. With holdout_subjects > 0 the last subjects
    of every image go to a separate CSV and a ``manifest_holdout.json``,
    giving disjoint train/holdout splits over shared saliency grids.
    """
    root = Path(root)
    (root / "maps").mkdir(parents=True, exist_ok=True)
    (root / "scanpaths").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    entries = []
    holdout_entries = []
    for i in range(n_images):
        image_id = f"img{i:04d}"
        sal = blob_saliency(width, height, rng)
        write_raster(sal, root / "maps" / f"{image_id}.smr")

        rows, holdout_rows = [], []
        for s in range(subjects_per_image):
            pts = sample_scanpath(sal, scanpath_length, params, profile, rng, temperature)
            dest = holdout_rows if s >= subjects_per_image - holdout_subjects else rows
            for k, p in enumerate(pts, start=1):
                dest.append((image_id, f"s{s}", k, p.x, p.y))

        def _write_csv(path, data):
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["image_id", "subject_id", "fixation_index", "x", "y"])
                w.writerows(data)

        entry = {
            "image_id": image_id,
            "saliency_path": f"maps/{image_id}.smr",
            "image_width": width,
            "image_height": height,
        }
        if rows:
            _write_csv(root / "scanpaths" / f"{image_id}.csv", rows)
            entries.append(dict(entry, scanpath_source=f"scanpaths/{image_id}.csv"))
        if holdout_rows:
            _write_csv(root / "scanpaths" / f"{image_id}_holdout.csv", holdout_rows)
            holdout_entries.append(
                dict(entry, scanpath_source=f"scanpaths/{image_id}_holdout.csv")
            )

    manifest_path = root / "manifest.json"
    manifest_path.write_text(
        dump_json({"downscale_factor": 1, "dataset_id": "synthetic", "entries": entries}),
        encoding="utf-8",
    )
    if holdout_entries:
        (root / "manifest_holdout.json").write_text(
            dump_json(
                {
                    "downscale_factor": 1,
                    "dataset_id": "synthetic",
                    "entries": holdout_entries,
                }
            ),
            encoding="utf-8",
        )
    return manifest_path
