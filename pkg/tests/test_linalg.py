import numpy as np
import numpy.testing as npt
import pytest

from geointerp.linalg import knn, matmul, smallest_eigenpairs, sym_eig

from conftest import random_psd, random_symmetric


def matmul_oracle(a, b):
    """Naive triple loop, the independent reference for matmul."""
    n, k = a.shape
    _, m = b.shape
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for l in range(k):
                s += a[i, l] * b[l, j]
            out[i, j] = s
    return out


def brute_knn(points, k):
    """Exhaustive pairwise-distance sort with low-index tie break."""
    n = points.shape[0]
    out = np.zeros((n, k), dtype=np.int64)
    for i in range(n):
        d = np.linalg.norm(points - points[i], axis=1)
        order = sorted(range(n), key=lambda j: (d[j], j))
        out[i] = [j for j in order if j != i][:k]
    return out


class TestMatmul:
    def test_identity(self, rng):
        a = rng.standard_normal((3, 4))
        npt.assert_array_equal(matmul(np.eye(3), a), a)

    def test_hand_checked_2x2(self):
        out = matmul(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[0.0], [1.0]]))
        npt.assert_array_equal(out, [[2.0], [4.0]])

    def test_against_triple_loop(self, rng):
        a = rng.standard_normal((5, 7))
        b = rng.standard_normal((7, 3))
        npt.assert_allclose(matmul(a, b), matmul_oracle(a, b), atol=1e-12)

    def test_dimension_mismatch_names_shapes(self, rng):
        with pytest.raises(ValueError, match=r"\(2, 3\).*\(4, 2\)"):
            matmul(rng.standard_normal((2, 3)), rng.standard_normal((4, 2)))

    def test_associativity(self, rng):
        for _ in range(5):
            a = rng.standard_normal((4, 6))
            b = rng.standard_normal((6, 3))
            c = rng.standard_normal((3, 5))
            left = matmul(matmul(a, b), c)
            right = matmul(a, matmul(b, c))
            npt.assert_allclose(left, right, rtol=1e-10, atol=1e-10)


class TestSymEig:
    def test_diagonal(self):
        res = sym_eig(np.diag([3.0, 1.0, 2.0]))
        npt.assert_allclose(res.values, [1.0, 2.0, 3.0], atol=1e-14)
        # permuted identity columns, up to sign
        npt.assert_allclose(np.abs(res.vectors), np.eye(3)[:, [1, 2, 0]], atol=1e-14)

    def test_analytic_2x2(self):
        res = sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
        npt.assert_allclose(res.values, [1.0, 3.0], atol=1e-12)
        v0, v1 = res.vectors[:, 0], res.vectors[:, 1]
        s = 1.0 / np.sqrt(2.0)
        assert min(np.abs(v0 - [s, -s]).max(), np.abs(v0 + [s, -s]).max()) < 1e-12
        assert min(np.abs(v1 - [s, s]).max(), np.abs(v1 + [s, s]).max()) < 1e-12

    def test_reconstruction_20x20(self, rng):
        a = random_symmetric(rng, 20)
        res = sym_eig(a)
        recon = res.vectors @ np.diag(res.values) @ res.vectors.T
        assert np.linalg.norm(recon - a) <= 1e-8 * np.linalg.norm(a)
        npt.assert_allclose(res.vectors.T @ res.vectors, np.eye(20), atol=1e-10)

    def test_eigen_residual_invariant(self, rng):
        a = random_symmetric(rng, 12)
        res = sym_eig(a)
        for lam, v in zip(res.values, res.vectors.T):
            assert np.linalg.norm(a @ v - lam * v) <= 1e-8 * np.linalg.norm(a)

    def test_trace_and_determinant(self, rng):
        a = random_symmetric(rng, 6)
        res = sym_eig(a)
        assert abs(res.values.sum() - np.trace(a)) <= 1e-9 * abs(np.trace(a)) + 1e-12
        npt.assert_allclose(np.prod(res.values), np.linalg.det(a), rtol=1e-8)

    def test_non_square_rejected(self, rng):
        with pytest.raises(ValueError, match="square"):
            sym_eig(rng.standard_normal((3, 4)))

    def test_values_ascending(self, rng):
        res = sym_eig(random_symmetric(rng, 15))
        assert np.all(np.diff(res.values) >= 0)

    def test_sweep_cap_reports_residual(self, rng):
        with pytest.raises(RuntimeError, match="off-diagonal residual"):
            sym_eig(random_symmetric(rng, 10), max_sweeps=0)


class TestSmallestEigenpairs:
    def test_psd_floor(self, rng):
        res = smallest_eigenpairs(random_psd(rng, 10), 3)
        assert res.values[0] >= -1e-8

    def test_path_graph_laplacian_null(self):
        lap = np.array([[1, -1, 0, 0], [-1, 2, -1, 0], [0, -1, 2, -1], [0, 0, -1, 1]],
                       dtype=np.float64)
        res = smallest_eigenpairs(lap, 1)
        assert abs(res.values[0]) < 1e-12
        v = res.vectors[:, 0]
        npt.assert_allclose(v, np.full(4, v[0]), atol=1e-10)

    def test_matches_full_spectrum(self, rng):
        a = random_psd(rng, 30)
        bottom = smallest_eigenpairs(a, 5)
        full = sym_eig(a)
        npt.assert_allclose(bottom.values, full.values[:5], atol=1e-8)
        # eigenvectors match up to sign (spectrum is simple w.h.p.)
        for k in range(5):
            v, w = bottom.vectors[:, k], full.vectors[:, k]
            assert min(np.abs(v - w).max(), np.abs(v + w).max()) < 1e-6

    def test_m_out_of_range(self, rng):
        a = random_psd(rng, 4)
        with pytest.raises(ValueError, match="out of range"):
            smallest_eigenpairs(a, 5)
        with pytest.raises(ValueError, match="out of range"):
            smallest_eigenpairs(a, 0)


class TestKnn:
    def test_three_collinear(self):
        pts = np.array([[0.0], [1.0], [10.0]])
        npt.assert_array_equal(knn(pts, 1), [[1], [0], [1]])

    def test_equilateral_triangle(self):
        # each point's two others; order may depend on float rounding of sqrt(3)/2
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
        result = knn(pts, 2)
        for i in range(3):
            assert set(result[i]) == {0, 1, 2} - {i}

    def test_exact_tie_index_ordered(self):
        # right isoceles corner: both neighbors of point 0 at exactly d^2 = 1
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        npt.assert_array_equal(knn(pts, 2)[0], [1, 2])

    def test_against_brute_force(self, rng):
        pts = rng.standard_normal((200, 3))
        npt.assert_array_equal(knn(pts, 8), brute_knn(pts, 8))

    def test_blocked_path_matches(self, rng):
        pts = rng.standard_normal((150, 2))
        npt.assert_array_equal(knn(pts, 5, block=32), knn(pts, 5))

    def test_k_too_large(self, rng):
        with pytest.raises(ValueError, match="k=5"):
            knn(rng.standard_normal((5, 2)), 5)

    def test_tie_break_low_index(self):
        # two equidistant neighbors: lower index wins
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [5.0, 0.0]])
        assert knn(pts, 1)[0, 0] == 1
