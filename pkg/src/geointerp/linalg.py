"""Dense real matrix kernels: products, symmetric eigendecomposition, k-NN search.

All routines work on float64 2-D numpy arrays (row-major). Matrices coming out
of samplers and loaders are validated to be finite; these kernels assume that.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class EigenResult:
    """Eigenvalues ascending, eigenvectors as orthonormal columns."""

    values: np.ndarray
    vectors: np.ndarray


def as_matrix(a, name="matrix"):
    """Coerce to a float64 2-D array, rejecting non-finite entries."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit shape check."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def sym_eig(a: np.ndarray, max_sweeps: int = 64) -> EigenResult:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    The input is symmetrized as (A + A^T)/2 before iterating. Returns the
    spectrum ascending with orthonormal eigenvectors in matching column order.
    Raises if the matrix is not square or the sweep cap is hit before the
    off-diagonal mass is annihilated.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"sym_eig expects a square matrix, got shape {a.shape}")
    n = a.shape[0]
    A = 0.5 * (a + a.T)
    V = np.eye(n)
    if n == 1:
        return EigenResult(values=A.diagonal().copy(), vectors=V)

    norm = np.linalg.norm(A)
    if norm == 0.0:
        return EigenResult(values=np.zeros(n), vectors=V)
    tol = 1e-15 * norm

    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2) * 2.0)
        if off <= tol:
            break
        # threshold keeps early sweeps from burning rotations on tiny entries
        thresh = off / n if off > tol else 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= max(thresh * 1e-2, 1e-300):
                    continue
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/cols p and q of A
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                A[p, q] = 0.0
                A[q, p] = 0.0
                Vp = V[:, p].copy()
                V[:, p] = c * Vp - s * V[:, q]
                V[:, q] = s * Vp + c * V[:, q]
    else:
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2) * 2.0)
        raise RuntimeError(
            f"sym_eig failed to converge in {max_sweeps} sweeps; "
            f"off-diagonal residual {off:.3e} (tolerance {tol:.3e})"
        )

    values = A.diagonal().copy()
    order = np.argsort(values, kind="stable")
    return EigenResult(values=values[order], vectors=V[:, order])


def smallest_eigenpairs(a: np.ndarray, m: int) -> EigenResult:
    """The m algebraically smallest eigenpairs of a symmetric matrix, ascending.

    Backed by LAPACK's subset solver; cross-checked against sym_eig in the
    test suite. Intended for the large PSD alignment matrices where a full
    Jacobi decomposition would be wasteful.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"smallest_eigenpairs expects a square matrix, got {a.shape}")
    n = a.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"m={m} out of range for a {n}x{n} matrix")
    A = 0.5 * (a + a.T)
    values, vectors = scipy.linalg.eigh(A, subset_by_index=[0, m - 1])
    return EigenResult(values=values, vectors=vectors)


def knn(points: np.ndarray, k: int, block: int = 512) -> np.ndarray:
    """Exact k nearest neighbors per row under the Euclidean metric.

    A point is never its own neighbor. Ties are broken toward the lower
    index. Returns an (N, k) integer index table.
    """
    pts = as_matrix(points, "points")
    n = pts.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k >= n:
        raise ValueError(f"k={k} must be < number of points ({n})")

    sq = np.sum(pts * pts, axis=1)
    out = np.empty((n, k), dtype=np.int64)
    for start in range(0, n, block):
        stop = min(start + block, n)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (pts[start:stop] @ pts.T)
        np.maximum(d2, 0.0, out=d2)
        rows = np.arange(start, stop)
        d2[rows - start, rows] = np.inf
        # lexsort: distance primary, index secondary, so ties go to low index
        idx = np.tile(np.arange(n), (stop - start, 1))
        order = np.lexsort((idx, d2), axis=1)
        out[start:stop] = order[:, :k]
    return out
