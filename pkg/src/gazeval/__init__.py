"""History-dependent gaze value maps over static saliency."""

from .dataio import (
    CostProfile,
    ModelParams,
    load_manifest,
    load_params,
    load_profile,
    read_raster,
    save_params,
    write_raster,
)
from .engine import PredictionContext, component_maps, predict_next, value_map
from .grid import Grid, PixelCoord
from .metrics import ScoreSample, auc_at, auc_set, nss_at, nss_set
from .presets import default_cost_profile, load_preset

__version__ = "0.1.0"

__all__ = [
    "CostProfile",
    "Grid",
    "ModelParams",
    "PixelCoord",
    "PredictionContext",
    "ScoreSample",
    "auc_at",
    "auc_set",
    "component_maps",
    "default_cost_profile",
    "load_manifest",
    "load_params",
    "load_preset",
    "load_profile",
    "nss_at",
    "nss_set",
    "predict_next",
    "read_raster",
    "save_params",
    "value_map",
    "write_raster",
]
