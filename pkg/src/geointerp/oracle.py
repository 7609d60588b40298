"""Analytic ground truth and evaluation metrics for learned geodesics.

Closed-form geodesics exist for both built-in manifolds: great-circle arcs
on the sphere, straight lines in the flat intrinsic chart of the swiss roll.
A Dijkstra shortest path over the k-NN graph gives an independent estimate
for anything else. The remaining metrics quantify how geodesic a decoded
curve is: polyline length, segment-length uniformity, and the fraction of
its second derivative lying in the decoded tangent space.
"""

import heapq
from dataclasses import dataclass, field

import numpy as np

from .curve import CubicCurve, curve_eval
from .datasets import PointCloud
from .linalg import knn

_EPS = 1e-12


@dataclass
class GeodesicReport:
    """Evaluation record for one decoded interpolation curve."""

    polyline_length: float
    uniformity_cv: float
    tangential_residual: float
    tangential_residual_raw: float
    on_manifold_dist: float
    oracle_length: float | None = None
    length_ratio: float | None = None
    excluded_samples: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "polyline_length": self.polyline_length,
            "uniformity_cv": self.uniformity_cv,
            "tangential_residual": self.tangential_residual,
            "tangential_residual_raw": self.tangential_residual_raw,
            "on_manifold_dist": self.on_manifold_dist,
            "oracle_length": self.oracle_length,
            "length_ratio": self.length_ratio,
            "excluded_samples": list(self.excluded_samples),
        }


def great_circle(p0, p1, m: int = 100, rtol: float = 1e-9):
    """Minor great-circle arc between two points on a sphere about the origin.

    Returns (points, length): m+1 samples by spherical linear interpolation
    and the analytic arc length R * arccos(<p0, p1> / R^2).
    """
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    r0, r1 = np.linalg.norm(p0), np.linalg.norm(p1)
    if abs(r0 - r1) > rtol * max(r0, r1):
        raise ValueError(f"endpoints lie on different radii: {r0:.12g} vs {r1:.12g}")
    radius = 0.5 * (r0 + r1)
    if radius <= 0:
        raise ValueError("endpoints must be nonzero")
    cosang = float(np.clip(p0 @ p1 / (radius * radius), -1.0, 1.0))
    angle = float(np.arccos(cosang))
    if angle > np.pi - 1e-9:
        raise ValueError("geodesic not unique: endpoints are antipodal")
    ts = np.linspace(0.0, 1.0, m + 1)
    if angle < 1e-12:
        pts = np.tile(p0, (m + 1, 1))
    else:
        s = np.sin(angle)
        pts = (np.sin((1.0 - ts) * angle)[:, None] * p0
               + np.sin(ts * angle)[:, None] * p1) / s
    return pts, radius * angle


def swissroll_geodesic(q0, q1, bounds=None) -> float:
    """Geodesic length between intrinsic (arclength, height) coordinate pairs.

    The swiss roll is isometric to a flat strip, so this is the Euclidean
    distance in the intrinsic chart. bounds, when given, is a pair of
    (min, max) arrays delimiting the sampled chart; out-of-range points are
    rejected.
    """
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    if bounds is not None:
        lo, hi = (np.asarray(b, dtype=np.float64) for b in bounds)
        tol = 1e-9 * (1.0 + np.max(np.abs(hi)))
        for q in (q0, q1):
            if np.any(q < lo - tol) or np.any(q > hi + tol):
                raise ValueError(f"intrinsic point {q} outside sampled range [{lo}, {hi}]")
    return float(np.linalg.norm(q1 - q0))


def polyline_length(points) -> float:
    """Sum of adjacent Euclidean distances."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("polyline needs at least 2 points")
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def uniformity_cv(points) -> float:
    """Population std of segment lengths divided by their mean (0 = uniform)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("polyline needs at least 2 points")
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    mean = float(np.mean(seg))
    if mean < _EPS:
        return 0.0
    return float(np.std(seg) / mean)


def tangential_residual(decoder, curve: CubicCurve, ts, dt: float):
    """Mean tangential fraction of the decoded curve's second derivative.

    Per sample: ||P_T dd|| / (||dd|| + eps), with P_T the projection onto
    the orthonormalized span of the decoder Jacobian columns. A scale-free
    diagnostic in [0, 1]; zero for an exact geodesic. Samples with a
    rank-deficient Jacobian are excluded from the mean and reported in the
    second return value. Returns (mean, excluded_indices, raw_mean) where
    raw_mean uses the unnormalized Jacobian columns (scale-dependent, kept
    for comparison with the training loss).
    """
    ts = np.asarray(ts, dtype=np.float64)
    fractions = []
    raw = []
    excluded = []
    for i, t in enumerate(ts):
        z3 = curve_eval(curve, np.array([t, t - dt, t + dt]))
        g = np.asarray(decoder.forward(z3), dtype=np.float64)
        dd = (g[1] + g[2] - 2.0 * g[0]) / (dt * dt)
        # stencil cancellation floor: below this, the second derivative is
        # numerically zero and the residual is the guarded 0/0 case
        floor = 64.0 * np.finfo(np.float64).eps * np.abs(g).max() / (dt * dt)
        jac = decoder.input_jacobian(z3[0])
        u, svals, _ = np.linalg.svd(jac, full_matrices=False)
        if svals[0] < _EPS or svals[-1] < 1e-10 * svals[0]:
            excluded.append(i)
            continue
        dd_norm = float(np.linalg.norm(dd))
        if dd_norm <= floor:
            fractions.append(0.0)
            raw.append(0.0)
            continue
        tangential = u.T @ dd
        fractions.append(float(np.linalg.norm(tangential)) / (dd_norm + _EPS))
        raw.append(float(np.linalg.norm(jac.T @ dd)) / (dd_norm + _EPS))
    if not fractions:
        raise ValueError("all samples had rank-deficient Jacobians")
    return float(np.mean(fractions)), excluded, float(np.mean(raw))


def procrustes_affine(a, b) -> float:
    """Residual of the best affine map from A onto B, normalized by ||B||.

    Solves min_L || [A, 1] L - B ||_F by least squares; small residuals mean
    A and B agree up to an affine change of coordinates.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    n, d = a.shape
    if n < d + 1:
        raise ValueError(f"need at least d+1={d + 1} rows, got {n}")
    aug = np.column_stack([a, np.ones(n)])
    sol, *_ = np.linalg.lstsq(aug, b, rcond=None)
    resid = np.linalg.norm(aug @ sol - b)
    return float(resid / max(np.linalg.norm(b), _EPS))


def nearest_training_distance(decoded, cloud: PointCloud) -> float:
    """Mean distance from decoded samples to their nearest training point."""
    dec = np.asarray(decoded, dtype=np.float64)
    pts = cloud.points
    d2 = (np.sum(dec * dec, axis=1)[:, None] + np.sum(pts * pts, axis=1)[None, :]
          - 2.0 * dec @ pts.T)
    return float(np.mean(np.sqrt(np.maximum(d2.min(axis=1), 0.0))))


def median_nn_spacing(cloud: PointCloud) -> float:
    """Median nearest-neighbor distance of the training set."""
    idx = knn(cloud.points, 1)
    dists = np.linalg.norm(cloud.points - cloud.points[idx[:, 0]], axis=1)
    return float(np.median(dists))


def knn_graph_shortest_path(cloud: PointCloud, k: int, i: int, j: int) -> float:
    """Dijkstra over the symmetric k-NN graph with Euclidean edge weights."""
    pts = cloud.points
    n = pts.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"endpoint indices ({i}, {j}) out of range for {n} points")
    if i == j:
        return 0.0
    idx = knn(pts, k)
    adj = [[] for _ in range(n)]
    for u in range(n):
        for v in idx[u]:
            w = float(np.linalg.norm(pts[u] - pts[v]))
            adj[u].append((int(v), w))
            adj[int(v)].append((u, w))
    dist = np.full(n, np.inf)
    dist[i] = 0.0
    heap = [(0.0, i)]
    while heap:
        d, u = heapq.heappop(heap)
        if u == j:
            return d
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    raise ValueError(f"no path between {i} and {j}: k-NN graph is disconnected")


def build_report(decoder, curve: CubicCurve, cloud: PointCloud, ts, dt: float,
                 oracle_length: float | None = None) -> GeodesicReport:
    """Evaluate a trained curve against a training cloud and optional oracle."""
    decoded = decoder.forward(curve_eval(curve, np.asarray(ts, dtype=np.float64)))
    length = polyline_length(decoded)
    resid, excluded, resid_raw = tangential_residual(decoder, curve, ts, dt)
    report = GeodesicReport(
        polyline_length=length,
        uniformity_cv=uniformity_cv(decoded),
        tangential_residual=resid,
        tangential_residual_raw=resid_raw,
        on_manifold_dist=nearest_training_distance(decoded, cloud),
        excluded_samples=excluded,
    )
    if oracle_length is not None:
        report.oracle_length = oracle_length
        report.length_ratio = length / oracle_length if oracle_length > 0 else None
    return report
