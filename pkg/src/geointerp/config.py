"""Run configuration: one JSON document drives the whole pipeline.

Unknown keys are rejected rather than ignored, and every report embeds the
fully resolved (defaults-applied) document so results stay attributable.
The only environment overrides honored anywhere are GEOINTERP_SEED and
GEOINTERP_THREADS.
"""

import copy
import json
import math
import os

from .autoencoder import AeTrainConfig
from .datasets import SwissRollParams
from .losses import CurveTrainConfig, LossWeights
from .ltsa import LtsaConfig

SEED_ENV = "GEOINTERP_SEED"
THREADS_ENV = "GEOINTERP_THREADS"

DEFAULTS = {
    "seed": 1,
    "data": {
        "manifold": "semisphere",
        "n": 2000,
        "radius": 1.0,
        "t_min": 1.5 * math.pi,
        "t_max": 4.5 * math.pi,
        "height": 10.0,
        "radius_scale": 1.0,
    },
    "ltsa": {
        "k": 12,
        "d": 2,
        "eig_floor": 1e-6,
    },
    "ae": {
        "epochs": 1500,
        "batch_size": 256,
        "lr": 1e-3,
        "w_rec": 1.0,
        "w_lat": 1.0,
        "w_dec": 1.0,
        "hidden": [96, 96],
        "activation": "tanh",
        "squared": True,
    },
    "curve": {
        "n_samples": 20,
        "dt": 1e-3,
        "lambda1": 1.0,
        "lambda2": 0.1,
        "lambda3": 1.0,
        "epochs": 2000,
        "lr": 1e-2,
        "resample_random": False,
    },
    "eval": {
        "n_samples": 100,
        "dt": 1e-3,
        "oracle": "auto",
    },
}


class ConfigError(ValueError):
    pass


def _merge(defaults: dict, user: dict, path: str) -> dict:
    out = copy.deepcopy(defaults)
    for key, value in user.items():
        here = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key: {here}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {here} must be an object")
            out[key] = _merge(defaults[key], value, here)
        else:
            out[key] = value
    return out


def resolve(user_doc: dict | None = None) -> dict:
    """Apply defaults, reject unknown keys, honor the seed env override."""
    doc = _merge(DEFAULTS, user_doc or {}, "")
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            doc["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env_seed!r}")
    if doc["data"]["manifold"] not in ("semisphere", "swissroll"):
        raise ConfigError(f"unknown manifold {doc['data']['manifold']!r}")
    return doc


def load(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config root must be an object")
    return resolve(doc)


def ltsa_config(doc: dict) -> LtsaConfig:
    sec = doc["ltsa"]
    return LtsaConfig(k=int(sec["k"]), d=int(sec["d"]), eig_floor=float(sec["eig_floor"]))


def ae_config(doc: dict) -> AeTrainConfig:
    sec = doc["ae"]
    return AeTrainConfig(
        latent_dim=int(doc["ltsa"]["d"]),
        epochs=int(sec["epochs"]),
        batch_size=int(sec["batch_size"]),
        lr=float(sec["lr"]),
        w_rec=float(sec["w_rec"]),
        w_lat=float(sec["w_lat"]),
        w_dec=float(sec["w_dec"]),
        seed=int(doc["seed"]),
        hidden=tuple(int(h) for h in sec["hidden"]),
        activation=str(sec["activation"]),
        squared=bool(sec["squared"]),
    )


def loss_weights(doc: dict) -> LossWeights:
    sec = doc["curve"]
    return LossWeights(
        conspeed=float(sec["lambda1"]),
        geo=float(sec["lambda2"]),
        minimizing=float(sec["lambda3"]),
    )


def curve_config(doc: dict, weights: LossWeights | None = None) -> CurveTrainConfig:
    sec = doc["curve"]
    return CurveTrainConfig(
        n_samples=int(sec["n_samples"]),
        dt=float(sec["dt"]),
        weights=weights if weights is not None else loss_weights(doc),
        epochs=int(sec["epochs"]),
        lr=float(sec["lr"]),
        resample_random=bool(sec["resample_random"]),
        seed=int(doc["seed"]),
    )


def swissroll_params(doc: dict) -> SwissRollParams:
    sec = doc["data"]
    return SwissRollParams(
        t_min=float(sec["t_min"]),
        t_max=float(sec["t_max"]),
        height=float(sec["height"]),
        radius_scale=float(sec["radius_scale"]),
    )
