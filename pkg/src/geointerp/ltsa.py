"""Local tangent space alignment: the geometric-prior embedding.

Builds per-neighborhood tangent coordinates by eigendecomposition of the
centered neighborhood Gram matrix, accumulates the orthogonal-complement
alignment matrix, and reads the embedding off its bottom eigenvectors (the
constant null vector skipped). Axes are then canonicalized so the first
embedding column follows the intrinsic direction of largest extent: the raw
eigenvector basis is only defined up to an orthogonal transform, and a global
metric fitted from the per-neighborhood tangent coordinates resolves that
freedom deterministically.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .datasets import PointCloud
from .linalg import knn, smallest_eigenpairs, sym_eig


@dataclass(frozen=True)
class LtsaConfig:
    k: int = 12
    d: int = 2
    eig_floor: float = 1e-6

    def validate(self, n_points: int):
        if self.k <= self.d:
            raise ValueError(f"k={self.k} must exceed target dimension d={self.d}")
        if self.k >= n_points:
            raise ValueError(f"k={self.k} must be < number of points ({n_points})")
        if self.eig_floor <= 0:
            raise ValueError(f"eig_floor must be > 0, got {self.eig_floor}")


@dataclass
class Embedding:
    """N x d latent coordinates, from LTSA or from a trained encoder."""

    coords: np.ndarray
    source: str = "ltsa"


def _check_connected(neighbor_idx: np.ndarray):
    """BFS over the symmetrized k-NN graph; reports component sizes on failure."""
    n = neighbor_idx.shape[0]
    adj = [set() for _ in range(n)]
    for i in range(n):
        for j in neighbor_idx[i]:
            adj[i].add(int(j))
            adj[int(j)].add(i)
    seen = np.zeros(n, dtype=bool)
    sizes = []
    for start in range(n):
        if seen[start]:
            continue
        queue = deque([start])
        seen[start] = True
        size = 0
        while queue:
            u = queue.popleft()
            size += 1
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
        sizes.append(size)
    if len(sizes) > 1:
        raise ValueError(
            f"neighborhood graph is disconnected: component sizes {sorted(sizes, reverse=True)}"
        )


def _neighborhood_tangents(cloud: PointCloud, cfg: LtsaConfig):
    """Per point: neighborhood indices (self first), orthonormal local basis
    and tangent-plane scores from the centered neighborhood Gram matrix."""
    pts = cloud.points
    n = pts.shape[0]
    idx = knn(pts, cfg.k)
    _check_connected(idx)
    nbhd = np.column_stack([np.arange(n), idx])
    bases = []
    scores = []
    for i in range(n):
        xi = pts[nbhd[i]]
        xc = xi - xi.mean(axis=0)
        gram = xc @ xc.T
        eig = sym_eig(gram)
        top = eig.vectors[:, -cfg.d:][:, ::-1]
        vals = np.maximum(eig.values[-cfg.d:][::-1], 0.0)
        bases.append(top)
        scores.append(top * np.sqrt(vals))
    return nbhd, bases, scores


def _assemble_alignment(nbhd, bases, n):
    m = nbhd.shape[1]
    b = np.zeros((n, n))
    ones = np.full((m, 1), 1.0 / np.sqrt(m))
    for i in range(n):
        gi = np.hstack([ones, bases[i]])
        w = np.eye(m) - gi @ gi.T
        rows = nbhd[i]
        b[np.ix_(rows, rows)] += w
    return 0.5 * (b + b.T)


def alignment_matrix(cloud: PointCloud, cfg: LtsaConfig) -> np.ndarray:
    """The N x N symmetric PSD alignment matrix (constant vector in its null space)."""
    cfg.validate(cloud.n)
    nbhd, bases, _ = _neighborhood_tangents(cloud, cfg)
    return _assemble_alignment(nbhd, bases, cloud.n)


def _metric_correction(y, nbhd, scores):
    """Average pullback metric of the embedding against local tangent scores.

    Per neighborhood, the least-squares linear map from centered embedding
    rows to the tangent-plane scores measures how the embedding distorts
    true manifold distances; L L^T is invariant to each neighborhood's
    arbitrary tangent-basis rotation, so the average is well defined.
    """
    d = y.shape[1]
    g = np.zeros((d, d))
    for rows, theta in zip(nbhd, scores):
        yc = y[rows] - y[rows].mean(axis=0)
        sol, *_ = np.linalg.lstsq(yc, theta, rcond=None)
        g += sol @ sol.T
    g /= len(scores)
    eig = sym_eig(g)
    root = eig.vectors @ np.diag(np.sqrt(np.maximum(eig.values, 0.0))) @ eig.vectors.T
    return root


def _fix_signs(coords):
    for j in range(coords.shape[1]):
        col = coords[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            coords[:, j] = -col
    return coords


def ltsa_embed(cloud: PointCloud, cfg: LtsaConfig | None = None) -> Embedding:
    """The d-dimensional LTSA embedding of a point cloud.

    The bottom d+1 eigenvectors of the alignment matrix are extracted, the
    constant null vector dropped, axes canonicalized by metric-corrected
    extent (largest first), columns rescaled to unit covariance
    (coords^T coords = N I), centered, and sign-fixed so each column's
    largest-magnitude entry is positive.
    """
    cfg = cfg or LtsaConfig()
    cfg.validate(cloud.n)
    nbhd, bases, scores = _neighborhood_tangents(cloud, cfg)
    b = _assemble_alignment(nbhd, bases, cloud.n)
    eig = smallest_eigenpairs(b, cfg.d + 1)
    if eig.values[0] > cfg.eig_floor:
        raise RuntimeError(
            f"alignment matrix lacks its trivial null vector: smallest eigenvalue "
            f"{eig.values[0]:.3e} exceeds eig_floor {cfg.eig_floor:.3e}"
        )
    y = eig.vectors[:, 1:cfg.d + 1]

    root = _metric_correction(y, nbhd, scores)
    yc = (y - y.mean(axis=0)) @ root
    u, svals, _ = np.linalg.svd(yc, full_matrices=False)
    if np.any(svals < 1e-12 * svals[0]):
        raise RuntimeError("embedding collapsed: metric-corrected coordinates are rank deficient")
    coords = np.sqrt(cloud.n) * u
    coords -= coords.mean(axis=0)
    return Embedding(coords=_fix_signs(coords), source="ltsa")
