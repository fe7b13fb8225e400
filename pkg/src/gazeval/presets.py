"""Packaged parameter sets and the illustrative default cost profile.

The parameter presets come in two families: one fitted per upstream
saliency model with free exploration weights, and one where all models
share a single averaged exploration-weight vector (suffix ``_shared_phi``).
The default cost profile is a demonstration placeholder, NOT a measured
human oculomotor profile. Its penalties are monotone in amplitude and
positive per radian of turn; since profile values are added into the value
map as-is, the penalties are encoded with falling amplitude values and
negative angle coefficients so that a positive w1 disfavors long, sharply
turned saccades.
"""

from __future__ import annotations

import json
from importlib import resources

from .dataio import CostProfile, ModelParams, params_from_dict, profile_from_dict
from .errors import SchemaViolation

PARAM_PRESETS = (
    "deepgaze2",
    "sam_resnet",
    "eml_net",
    "casnet2",
    "deepgaze2_shared_phi",
    "sam_resnet_shared_phi",
    "eml_net_shared_phi",
    "casnet2_shared_phi",
    "unisal_shared_phi",
)


def _read(name: str) -> dict:
    ref = resources.files("gazeval").joinpath("data", name)
    return json.loads(ref.read_text(encoding="utf-8"))


def load_preset(name: str) -> ModelParams:
    if name not in PARAM_PRESETS:
        raise SchemaViolation(
            f"unknown preset {name!r}; available: {', '.join(PARAM_PRESETS)}"
        )
    return params_from_dict(_read(f"params_{name}.json"))


def default_cost_profile() -> CostProfile:
    return profile_from_dict(_read("cost_profile_default.json"))
