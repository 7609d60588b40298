"""Endpoint-constrained cubic curves in latent space.

The interpolation curve c(t) = (1-t) z0 + t z1 + t (1-t) (a + b t) hits its
endpoints by construction for any coefficients, leaving exactly 2d free
parameters (a, b) for gradient descent. The constraints are eliminated by
this re-parametrization rather than penalized.
"""

import json
from dataclasses import dataclass

import numpy as np


@dataclass
class CubicCurve:
    z0: np.ndarray
    z1: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.z0 = np.asarray(self.z0, dtype=np.float64)
        self.z1 = np.asarray(self.z1, dtype=np.float64)
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        shapes = {v.shape for v in (self.z0, self.z1, self.a, self.b)}
        if len(shapes) != 1 or self.z0.ndim != 1:
            raise ValueError("z0, z1, a, b must be vectors of one common dimension")
        for name, v in (("z0", self.z0), ("z1", self.z1), ("a", self.a), ("b", self.b)):
            if not np.all(np.isfinite(v)):
                raise ValueError(f"curve coefficient {name} is not finite")

    @property
    def dim(self) -> int:
        return self.z0.shape[0]

    @classmethod
    def chord(cls, z0, z1) -> "CubicCurve":
        """The linear-interpolation warm start: a = b = 0."""
        z0 = np.asarray(z0, dtype=np.float64)
        z1 = np.asarray(z1, dtype=np.float64)
        return cls(z0, z1, np.zeros_like(z0), np.zeros_like(z0))


def curve_eval(curve: CubicCurve, t) -> np.ndarray:
    """c(t); t may be a scalar or a 1-D array (rows of output align with t).

    Values outside [0, 1] are allowed: the polynomial extends smoothly, which
    keeps boundary finite-difference stencils central.
    """
    t = np.asarray(t, dtype=np.float64)
    tt = t[..., None]
    return (1.0 - tt) * curve.z0 + tt * curve.z1 + tt * (1.0 - tt) * (curve.a + curve.b * tt)


def curve_velocity(curve: CubicCurve, t) -> np.ndarray:
    """Analytic c'(t) = (z1 - z0) + (1 - 2t)(a + b t) + t(1 - t) b."""
    t = np.asarray(t, dtype=np.float64)
    tt = t[..., None]
    return (curve.z1 - curve.z0) + (1.0 - 2.0 * tt) * (curve.a + curve.b * tt) \
        + tt * (1.0 - tt) * curve.b


def curve_accel(curve: CubicCurve, t) -> np.ndarray:
    """Analytic c''(t) = -2a + (2 - 6t) b."""
    t = np.asarray(t, dtype=np.float64)
    tt = t[..., None]
    return -2.0 * curve.a + (2.0 - 6.0 * tt) * curve.b


def save_curve(curve: CubicCurve, path) -> None:
    """JSON {z0, z1, a, b} with full-precision numbers."""
    doc = {
        "z0": curve.z0.tolist(),
        "z1": curve.z1.tolist(),
        "a": curve.a.tolist(),
        "b": curve.b.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_curve(path) -> CubicCurve:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        return CubicCurve(doc["z0"], doc["z1"], doc["a"], doc["b"])
    except KeyError as missing:
        raise ValueError(f"{path}: curve file missing key {missing}") from None
