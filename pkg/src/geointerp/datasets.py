"""Deterministic samplers for the synthetic benchmark manifolds and CSV I/O.

All randomness flows through a Philox 4x64 counter-based generator keyed by
the caller's seed (constants documented in the numpy reference and the
original Salmon et al. paper), so streams are reproducible across runs and
platforms.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix


def rng_from_seed(seed: int) -> np.random.Generator:
    """The package-wide PRNG: Philox 4x64-10 keyed by the seed."""
    return np.random.Generator(np.random.Philox(key=int(seed)))


@dataclass
class PointCloud:
    """N ambient points sampled on or near a data manifold (rows = points)."""

    points: np.ndarray
    manifold_tag: str | None = None
    seed: int | None = None
    # intrinsic chart coordinates, kept for oracle evaluation only
    intrinsic: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.points = as_matrix(self.points, "points")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def diameter(self) -> float:
        """Length of the bounding-box diagonal, a cheap scale reference."""
        span = self.points.max(axis=0) - self.points.min(axis=0)
        return float(np.linalg.norm(span))


@dataclass(frozen=True)
class SwissRollParams:
    """Roll parameter range (radians), extrusion height and radius multiplier."""

    t_min: float = 1.5 * math.pi
    t_max: float = 4.5 * math.pi
    height: float = 10.0
    radius_scale: float = 1.0

    def validate(self):
        if not self.t_min > 0:
            raise ValueError(f"t_min must be > 0, got {self.t_min}")
        if not self.t_max > self.t_min:
            raise ValueError(f"t_max must exceed t_min, got [{self.t_min}, {self.t_max}]")
        if not self.height > 0:
            raise ValueError(f"height must be > 0, got {self.height}")
        if not self.radius_scale > 0:
            raise ValueError(f"radius_scale must be > 0, got {self.radius_scale}")


def sample_semisphere(n: int, radius: float = 1.0, seed: int = 0) -> PointCloud:
    """n points uniform by area on the upper hemisphere (z >= 0).

    Uses the exact construction z ~ U[0, R], azimuth ~ U[0, 2*pi): slices of
    equal height on a sphere have equal area, so no rejection is needed.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not radius > 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    rng = rng_from_seed(seed)
    z = radius * rng.random(n)
    phi = 2.0 * math.pi * rng.random(n)
    r_xy = np.sqrt(np.maximum(radius * radius - z * z, 0.0))
    pts = np.column_stack([r_xy * np.cos(phi), r_xy * np.sin(phi), z])
    return PointCloud(points=pts, manifold_tag="semisphere", seed=seed)


def _spiral_arclength(t: np.ndarray | float) -> np.ndarray | float:
    """Antiderivative of sqrt(1 + t^2): arc length of the unit spiral r = t."""
    return 0.5 * (t * np.sqrt(1.0 + t * t) + np.arcsinh(t))


def _invert_arclength(target, t_lo, t_hi, iters=80):
    """Solve _spiral_arclength(t) - _spiral_arclength(t_lo) = target by bisection."""
    base = _spiral_arclength(t_lo)
    lo = np.full_like(target, t_lo)
    hi = np.full_like(target, t_hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = (_spiral_arclength(mid) - base) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def sample_swissroll(n: int, params: SwissRollParams | None = None, seed: int = 0) -> PointCloud:
    """n points uniform by surface area on the swiss-roll manifold.

    Points are (s*t*cos t, h, s*t*sin t). The roll parameter t is drawn
    uniform by arc length (inverse CDF of the spiral arc length, solved by
    bisection) rather than uniform in t, and h is uniform in [0, height].
    The intrinsic (arclength, h) chart is retained on the returned cloud.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    params = params or SwissRollParams()
    params.validate()
    rng = rng_from_seed(seed)
    u = rng.random(n)
    h = params.height * rng.random(n)

    total = _spiral_arclength(params.t_max) - _spiral_arclength(params.t_min)
    t = _invert_arclength(u * total, params.t_min, params.t_max)
    s = params.radius_scale
    pts = np.column_stack([s * t * np.cos(t), h, s * t * np.sin(t)])
    arclength = s * (_spiral_arclength(t) - _spiral_arclength(params.t_min))
    intrinsic = np.column_stack([arclength, h])
    return PointCloud(points=pts, manifold_tag="swissroll", seed=seed, intrinsic=intrinsic)


def swissroll_intrinsic(points: np.ndarray, params: SwissRollParams) -> np.ndarray:
    """Recover (arclength, height) intrinsic coordinates of on-surface points.

    Exact inversion of the parametrization: t comes from the winding radius,
    so points must lie on the surface (loader output qualifies only if the
    file was produced by sample_swissroll with the same params).
    """
    pts = as_matrix(points, "points")
    if pts.shape[1] != 3:
        raise ValueError(f"swiss-roll points must be 3-D, got {pts.shape[1]}-D")
    s = params.radius_scale
    t = np.sqrt(pts[:, 0] ** 2 + pts[:, 2] ** 2) / s
    eps = 1e-9 * (1.0 + params.t_max)
    if np.any(t < params.t_min - eps) or np.any(t > params.t_max + eps):
        raise ValueError("point radius outside the sampled roll parameter range")
    arclength = s * (_spiral_arclength(t) - _spiral_arclength(params.t_min))
    return np.column_stack([arclength, pts[:, 1]])


def save_csv(cloud: PointCloud, path) -> None:
    """Write one point per line with an x0,x1,... header, 17 significant digits."""
    pts = cloud.points
    header = ",".join(f"x{j}" for j in range(pts.shape[1]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in pts:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def save_matrix_csv(matrix: np.ndarray, path) -> None:
    """save_csv for a bare coordinate matrix."""
    save_csv(PointCloud(points=matrix), path)


def load_csv(path) -> PointCloud:
    """Read a point-cloud CSV written by save_csv; malformed rows name their line."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: no data rows")
    header = lines[0].split(",")
    ncols = len(header)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != ncols:
            raise ValueError(
                f"{path}: line {lineno}: expected {ncols} fields, got {len(fields)}"
            )
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise ValueError(f"{path}: line {lineno}: non-numeric field") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return PointCloud(points=np.array(rows, dtype=np.float64))
