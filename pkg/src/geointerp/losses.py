"""Losses for geodesic curve training, with their gradient over the curve.

All t-derivatives of the decoded curve G(t) = D(c(t)) are central
finite-difference stencils, which turns every loss into an explicit function
of decoder forward passes at stencil points. The gradient over the curve's
free coefficients is computed by reverse mode through those forward passes;
the tangent-basis (Jacobian) factor inside the geodesic loss is held constant
per evaluation, and the finite-difference checks in the test suite target
exactly that held-constant objective.
"""

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .curve import CubicCurve, curve_eval
from .datasets import rng_from_seed

_TINY = 1e-12


@dataclass(frozen=True)
class LossWeights:
    """Balance weights for (constant-speed, geodesic, minimizing) terms."""

    conspeed: float = 1.0
    geo: float = 0.1
    minimizing: float = 1.0

    def validate(self):
        w = (self.conspeed, self.geo, self.minimizing)
        if any(x < 0 for x in w):
            raise ValueError(f"loss weights must be nonnegative, got {w}")
        if all(x == 0 for x in w):
            raise ValueError("weights all zero")


@dataclass(frozen=True)
class BatchSpec:
    """Sample parameters 0 = t_0 < ... < t_n = 1 and the stencil step."""

    ts: np.ndarray
    dt: float

    @classmethod
    def uniform(cls, n_samples: int = 20, dt: float = 1e-3) -> "BatchSpec":
        """Equally spaced t_i = i/n, the deterministic default."""
        if n_samples < 2:
            raise ValueError(f"need at least 2 segments, got n_samples={n_samples}")
        return cls(ts=np.linspace(0.0, 1.0, n_samples + 1), dt=dt)

    @classmethod
    def random(cls, n_samples: int, dt: float, rng: np.random.Generator) -> "BatchSpec":
        """Endpoints pinned, interior points uniform at random (paper-literal)."""
        if n_samples < 2:
            raise ValueError(f"need at least 2 segments, got n_samples={n_samples}")
        interior = np.sort(rng.random(n_samples - 1))
        ts = np.concatenate([[0.0], interior, [1.0]])
        spacing = np.min(np.diff(ts))
        return cls(ts=ts, dt=min(dt, 0.49 * spacing))

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=np.float64)
        object.__setattr__(self, "ts", ts)
        if ts.ndim != 1 or ts.shape[0] < 3:
            raise ValueError("ts must hold at least three sample parameters")
        if ts[0] != 0.0 or ts[-1] != 1.0:
            raise ValueError("ts must start at exactly 0 and end at exactly 1")
        gaps = np.diff(ts)
        if np.any(gaps <= 0):
            raise ValueError("ts must be strictly increasing")
        if not 0.0 < self.dt <= np.min(gaps) / 2.0 + 1e-15:
            raise ValueError(
                f"dt={self.dt} must be positive and at most half the minimum "
                f"sample spacing ({np.min(gaps):.3g})"
            )


@dataclass
class CurveBatch:
    """One evaluation of the decoded curve on a sample grid."""

    ts: np.ndarray
    latent: np.ndarray
    decoded: np.ndarray
    speeds: np.ndarray
    dt: float


def _stencil_eval(decoder, curve: CubicCurve, ts: np.ndarray, dt: float):
    """Decode center/minus/plus stencil points in one batched forward pass."""
    m = ts.shape[0]
    t_all = np.concatenate([ts, ts - dt, ts + dt])
    z_all = curve_eval(curve, t_all)
    g_all = decoder.forward(z_all)
    return t_all, z_all, g_all[:m], g_all[m:2 * m], g_all[2 * m:]


def make_curve_batch(decoder, curve: CubicCurve, spec: BatchSpec) -> CurveBatch:
    """Evaluate the decoded curve and its speed norms on the sample grid."""
    _, z_all, g0, gm, gp = _stencil_eval(decoder, curve, spec.ts, spec.dt)
    m = spec.ts.shape[0]
    speeds = np.linalg.norm((gp - gm) / (2.0 * spec.dt), axis=1)
    return CurveBatch(ts=spec.ts.copy(), latent=z_all[:m], decoded=g0,
                      speeds=speeds, dt=spec.dt)


def speed_norm(decoder, curve: CubicCurve, t: float, dt: float) -> float:
    """Central-difference speed of the decoded curve at one parameter value.

    The curve polynomial extends smoothly outside [0, 1], so the stencil is
    central even at the endpoints.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    z = curve_eval(curve, np.array([t - dt, t + dt]))
    g = decoder.forward(z)
    return float(np.linalg.norm((g[1] - g[0]) / (2.0 * dt)))


def second_diff(decoder, curve: CubicCurve, t: float, dt: float) -> np.ndarray:
    """(G(t+dt) + G(t-dt) - 2 G(t)) / dt^2, the stencil exact on cubics."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    z = curve_eval(curve, np.array([t, t - dt, t + dt]))
    g = decoder.forward(z)
    return (g[1] + g[2] - 2.0 * g[0]) / (dt * dt)


def l_conspeed(batch: CurveBatch) -> float:
    """Constant speed loss: || s / mean(s) - 1 || over all sampled speeds."""
    mean = float(np.mean(batch.speeds))
    if mean < _TINY:
        raise ValueError("degenerate curve: decoded speeds are all ~0")
    return float(np.linalg.norm(batch.speeds / mean - 1.0))


def _jacobians(decoder, zs: np.ndarray) -> np.ndarray:
    """Decoder Jacobians at each latent row, shape (m, out_dim, d)."""
    if isinstance(decoder, nn.MlpModel):
        return nn.batch_jacobian(decoder, zs)
    return np.stack([decoder.input_jacobian(z) for z in zs])


def _geo_omegas(decoder, curve, batch, jacobians=None) -> np.ndarray:
    ts, dt = batch.ts, batch.dt
    _, _, g0, gm, gp = _stencil_eval(decoder, curve, ts, dt)
    dd = (gp + gm - 2.0 * g0) / (dt * dt)
    if jacobians is None:
        jacobians = _jacobians(decoder, batch.latent)
    # omega_i = J_i^T dd_i, the tangential components of the acceleration
    return np.einsum("ioc,io->ic", jacobians, dd)


def l_geo(decoder, curve: CubicCurve, batch: CurveBatch, jacobians=None) -> float:
    """Geodesic loss: Frobenius norm of the stacked tangential accelerations.

    Per sample, the finite-difference second derivative of the decoded curve
    is projected onto the raw decoder Jacobian columns; a geodesic has zero
    projection (the acceleration is normal to the manifold).
    """
    return float(np.linalg.norm(_geo_omegas(decoder, curve, batch, jacobians)))


def l_min(batch: CurveBatch) -> float:
    """Minimizing loss: polyline length of the decoded curve."""
    seg = np.diff(batch.decoded, axis=0)
    return float(np.sum(np.linalg.norm(seg, axis=1)))


def total_loss(decoder, curve: CubicCurve, batch: CurveBatch, weights: LossWeights,
               jacobians=None):
    """Weighted sum of the three losses; returns (total, per-term dict).

    Passing jacobians pins the tangent basis of the geodesic term, which is
    how the finite-difference gradient checks evaluate the same held-constant
    objective the analytic gradient differentiates.
    """
    weights.validate()
    terms = {
        "conspeed": l_conspeed(batch) if weights.conspeed > 0 else 0.0,
        "geo": l_geo(decoder, curve, batch, jacobians) if weights.geo > 0 else 0.0,
        "min": l_min(batch) if weights.minimizing > 0 else 0.0,
    }
    total = (weights.conspeed * terms["conspeed"]
             + weights.geo * terms["geo"]
             + weights.minimizing * terms["min"])
    terms["total"] = total
    return total, terms


def total_loss_grad(decoder, curve: CubicCurve, spec: BatchSpec, weights: LossWeights):
    """Gradient of the total loss over the curve's free coefficients (a, b).

    Every t-derivative is the central stencil, so the loss is an explicit
    function of decoder forward passes at 3(n+1) parameter values; one
    reverse sweep through the decoder pulls the per-point loss gradients
    back to latent space, and the cubic's coefficient sensitivities
    (dc/da = t(1-t), dc/db = t^2(1-t)) collapse them onto (a, b). The
    Jacobian factor in the geodesic term is held constant. Returns
    (grad_a, grad_b, per-term dict).
    """
    weights.validate()
    ts, dt = spec.ts, spec.dt
    m = ts.shape[0]
    t_all, z_all, g0, gm, gp = _stencil_eval(decoder, curve, ts, dt)

    d_g0 = np.zeros_like(g0)
    d_gm = np.zeros_like(gm)
    d_gp = np.zeros_like(gp)
    terms = {"conspeed": 0.0, "geo": 0.0, "min": 0.0}

    if weights.conspeed > 0:
        v = (gp - gm) / (2.0 * dt)
        s = np.linalg.norm(v, axis=1)
        mean = float(np.mean(s))
        if mean < _TINY:
            raise ValueError("degenerate curve: decoded speeds are all ~0")
        r = s / mean - 1.0
        cs = float(np.linalg.norm(r))
        terms["conspeed"] = cs
        if cs > _TINY:
            # dL/ds_j = r_j/(L m̄) - (Σ r_i s_i)/(L m m̄²), m̄ = mean speed
            dl_ds = r / (cs * mean) - float(r @ s) / (cs * m * mean * mean)
            safe = np.where(s > _TINY, s, 1.0)
            dl_dv = (weights.conspeed * dl_ds / safe)[:, None] * v
            d_gp += dl_dv / (2.0 * dt)
            d_gm -= dl_dv / (2.0 * dt)

    if weights.geo > 0:
        dd = (gp + gm - 2.0 * g0) / (dt * dt)
        jac = _jacobians(decoder, z_all[:m])
        omega = np.einsum("ioc,io->ic", jac, dd)
        lg = float(np.linalg.norm(omega))
        terms["geo"] = lg
        if lg > _TINY:
            dl_dd = weights.geo * np.einsum("ioc,ic->io", jac, omega / lg)
            d_gp += dl_dd / (dt * dt)
            d_gm += dl_dd / (dt * dt)
            d_g0 -= 2.0 * dl_dd / (dt * dt)

    if weights.minimizing > 0:
        seg = np.diff(g0, axis=0)
        lengths = np.linalg.norm(seg, axis=1)
        terms["min"] = float(np.sum(lengths))
        safe = np.where(lengths > _TINY, lengths, 1.0)
        units = np.where((lengths > _TINY)[:, None], seg / safe[:, None], 0.0)
        d_g0[1:] += weights.minimizing * units
        d_g0[:-1] -= weights.minimizing * units

    upstream = np.concatenate([d_g0, d_gm, d_gp], axis=0)
    dl_dz = decoder.backward(z_all, upstream).input_grad

    p = t_all * (1.0 - t_all)          # dc/da coefficient
    q = t_all * p                      # dc/db coefficient
    grad_a = p @ dl_dz
    grad_b = q @ dl_dz

    terms["total"] = (weights.conspeed * terms["conspeed"]
                      + weights.geo * terms["geo"]
                      + weights.minimizing * terms["min"])
    if not (np.all(np.isfinite(grad_a)) and np.all(np.isfinite(grad_b))):
        raise RuntimeError("non-finite curve gradient")
    return grad_a, grad_b, terms


@dataclass
class CurveTrainConfig:
    n_samples: int = 20
    dt: float = 1e-3
    weights: LossWeights = field(default_factory=LossWeights)
    epochs: int = 2000
    lr: float = 1e-2
    resample_random: bool = False
    seed: int = 0
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8


def train_curve(decoder, z0, z1, cfg: CurveTrainConfig):
    """Gradient-descent training of the free coefficients of a cubic curve.

    Starts from the linear chord and runs adaptive-moment updates on (a, b)
    with the decoder frozen. Returns the trained curve and the per-epoch
    loss-term history.
    """
    cfg.weights.validate()
    curve = CubicCurve.chord(z0, z1)
    if cfg.epochs == 0:
        return curve, []
    rng = rng_from_seed(cfg.seed)
    fixed_spec = BatchSpec.uniform(cfg.n_samples, cfg.dt)

    d = curve.dim
    m_a = np.zeros(d); v_a = np.zeros(d)
    m_b = np.zeros(d); v_b = np.zeros(d)
    b1, b2 = cfg.betas
    history = []
    for epoch in range(cfg.epochs):
        spec = (BatchSpec.random(cfg.n_samples, cfg.dt, rng)
                if cfg.resample_random else fixed_spec)
        ga, gb, terms = total_loss_grad(decoder, curve, spec, cfg.weights)
        if not np.isfinite(terms["total"]):
            raise RuntimeError(f"curve training diverged at epoch {epoch}")
        t = epoch + 1
        c1 = 1.0 - b1 ** t
        c2 = 1.0 - b2 ** t
        m_a = b1 * m_a + (1 - b1) * ga
        v_a = b2 * v_a + (1 - b2) * ga * ga
        m_b = b1 * m_b + (1 - b1) * gb
        v_b = b2 * v_b + (1 - b2) * gb * gb
        new_a = curve.a - cfg.lr * (m_a / c1) / (np.sqrt(v_a / c2) + cfg.eps)
        new_b = curve.b - cfg.lr * (m_b / c1) / (np.sqrt(v_b / c2) + cfg.eps)
        curve = CubicCurve(curve.z0, curve.z1, new_a, new_b)
        history.append({"epoch": epoch, **terms})
    return curve, history
