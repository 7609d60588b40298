import numpy as np
import numpy.testing as npt
import pytest

from geointerp.curve import CubicCurve
from geointerp.datasets import PointCloud, sample_semisphere
from geointerp.oracle import (great_circle, knn_graph_shortest_path,
                              median_nn_spacing, nearest_training_distance,
                              polyline_length, procrustes_affine,
                              swissroll_geodesic, tangential_residual,
                              uniformity_cv)

from test_losses import CircleDecoder, LinearDecoder


class TestGreatCircle:
    def test_quarter_circle(self):
        pts, length = great_circle([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], m=10)
        assert abs(length - np.pi / 2) < 1e-12
        npt.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)

    def test_degenerate_limit_linear(self):
        p0 = np.array([0.0, 0.0, 1.0])
        for eps in (1e-3, 1e-4, 1e-5):
            p1 = np.array([np.sin(eps), 0.0, np.cos(eps)])
            _, length = great_circle(p0, p1)
            assert abs(length - eps) < 1e-9

    def test_polyline_converges_to_length(self, rng):
        p0 = rng.standard_normal(3)
        p0 /= np.linalg.norm(p0)
        p1 = rng.standard_normal(3)
        p1 /= np.linalg.norm(p1)
        pts, length = great_circle(p0, p1, m=1000)
        assert abs(polyline_length(pts) - length) < 1e-5
        assert polyline_length(pts) <= length

    def test_polyline_monotone_in_m(self, rng):
        p0 = np.array([1.0, 0.0, 0.0])
        p1 = np.array([0.0, 0.0, 1.0])
        lengths = [polyline_length(great_circle(p0, p1, m=m)[0]) for m in (4, 8, 16, 32)]
        assert all(a < b for a, b in zip(lengths, lengths[1:]))

    def test_symmetry_and_rotation_invariance(self, rng):
        p0 = np.array([0.6, 0.0, 0.8])
        p1 = np.array([0.0, 1.0, 0.0])
        _, l01 = great_circle(p0, p1)
        _, l10 = great_circle(p1, p0)
        assert abs(l01 - l10) < 1e-12
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        _, lrot = great_circle(q @ p0, q @ p1)
        assert abs(l01 - lrot) < 1e-9

    def test_antipodal_rejected(self):
        with pytest.raises(ValueError, match="antipodal"):
            great_circle([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0])

    def test_radius_mismatch_rejected(self):
        with pytest.raises(ValueError, match="radii"):
            great_circle([1.0, 0.0, 0.0], [0.0, 2.0, 0.0])


class TestSwissrollGeodesic:
    def test_same_point_zero(self):
        assert swissroll_geodesic([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_three_four_five(self):
        assert abs(swissroll_geodesic([0.0, 0.0], [3.0, 4.0]) - 5.0) < 1e-15

    def test_out_of_range_rejected(self):
        bounds = (np.zeros(2), np.array([10.0, 5.0]))
        with pytest.raises(ValueError, match="outside"):
            swissroll_geodesic([0.0, 0.0], [11.0, 1.0], bounds=bounds)

    def test_matches_graph_oracle(self):
        # graph distance overestimates by the zigzag overhead, which shrinks
        # with density; k=16 on n=3000 keeps it inside 2%
        from geointerp.datasets import sample_swissroll
        cloud = sample_swissroll(3000, seed=6)
        i, j = 10, 1200
        intrinsic_len = swissroll_geodesic(cloud.intrinsic[i], cloud.intrinsic[j])
        graph_len = knn_graph_shortest_path(cloud, 16, i, j)
        assert intrinsic_len <= graph_len * 1.001
        assert abs(graph_len - intrinsic_len) / intrinsic_len < 0.02


class TestPolylineMetrics:
    def test_colinear_equal_spacing_cv_zero(self):
        pts = np.outer(np.arange(5), [1.0, 1.0])
        assert uniformity_cv(pts) == 0.0

    def test_unit_square_length(self):
        pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]], dtype=float)
        assert polyline_length(pts) == 4.0

    def test_cv_hand_example(self):
        # segment lengths (1, 3): std 1, mean 2
        pts = np.array([[0.0], [1.0], [4.0]])
        assert abs(uniformity_cv(pts) - 0.5) < 1e-15

    def test_too_few_points(self):
        with pytest.raises(ValueError, match="2 points"):
            polyline_length(np.array([[1.0, 2.0]]))


class TestTangentialResidual:
    def test_affine_decoder_chord_guarded_zero(self, rng):
        dec = LinearDecoder(rng.standard_normal((3, 2)))
        c = CubicCurve.chord(rng.standard_normal(2), rng.standard_normal(2))
        mean, excluded, _ = tangential_residual(dec, c, np.linspace(0, 1, 9), 1e-4)
        assert mean < 1e-6
        assert excluded == []

    def test_circle_constant_speed_tiny(self):
        dec = CircleDecoder()
        c = CubicCurve.chord(np.array([0.2]), np.array([2.0]))
        mean, _, _ = tangential_residual(dec, c, np.linspace(0, 1, 11), 1e-4)
        assert mean < 1e-6

    def test_circle_reparametrized_large(self):
        dec = CircleDecoder()
        c = CubicCurve(np.array([0.2]), np.array([2.0]),
                       np.array([1.4]), np.zeros(1))
        mean, _, _ = tangential_residual(dec, c, np.linspace(0, 1, 11), 1e-4)
        assert mean > 0.1

    def test_bounded_unit_interval(self, rng):
        from geointerp import nn
        dec = nn.init_mlp([2, 8, 3], seed=3)
        c = CubicCurve(rng.standard_normal(2), rng.standard_normal(2),
                       rng.standard_normal(2), rng.standard_normal(2))
        mean, _, raw = tangential_residual(dec, c, np.linspace(0, 1, 9), 1e-3)
        assert 0.0 <= mean <= 1.0

    def test_rank_deficient_samples_excluded(self):
        class PinchedDecoder:
            # Jacobian loses rank exactly where the first latent coordinate
            # crosses zero (t = 0.5 on the chord below)
            def forward(self, x):
                x = np.atleast_2d(x)
                return np.column_stack([x[:, 0], x[:, 0] * x[:, 1],
                                        x[:, 0] ** 2 * x[:, 1]])

            def input_jacobian(self, z):
                return np.array([[1.0, 0.0], [z[1], z[0]],
                                 [2 * z[0] * z[1], z[0] ** 2]])

        class FlatDecoder:
            def forward(self, x):
                x = np.atleast_2d(x)
                return np.column_stack([x[:, 0], np.zeros(len(x)), np.zeros(len(x))])

            def input_jacobian(self, z):
                return np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]])

        c = CubicCurve(np.array([-1.0, 0.0]), np.array([1.0, 0.0]),
                       np.array([0.0, 0.5]), np.zeros(2))
        mean, excluded, _ = tangential_residual(PinchedDecoder(), c,
                                                np.linspace(0, 1, 5), 1e-4)
        assert excluded == [2]
        assert 0.0 <= mean <= 1.0
        # every sample rank-deficient: no mean to report
        with pytest.raises(ValueError, match="rank-deficient"):
            tangential_residual(FlatDecoder(), c, np.linspace(0, 1, 5), 1e-4)


class TestProcrustes:
    def test_exact_affine_match(self, rng):
        a = rng.standard_normal((50, 3))
        m = rng.standard_normal((3, 3)) + 3.0 * np.eye(3)
        b = a @ m + rng.standard_normal(3)
        assert procrustes_affine(a, b) < 1e-10

    def test_noise_floor(self, rng):
        a = rng.standard_normal((400, 2))
        sigma = 0.01
        b = a + sigma * rng.standard_normal((400, 2))
        resid = procrustes_affine(a, b)
        expected = sigma * np.sqrt(400 * 2) / np.linalg.norm(b)
        assert 0.5 * expected < resid < 1.5 * expected

    def test_shuffled_rows_large_residual(self, rng):
        a = rng.standard_normal((200, 2))
        b = a[rng.permutation(200)]
        assert procrustes_affine(a, b) > 0.5

    def test_too_few_rows(self, rng):
        with pytest.raises(ValueError, match="d\\+1"):
            procrustes_affine(rng.standard_normal((2, 2)), rng.standard_normal((2, 2)))


class TestGraphShortestPath:
    def test_same_node_zero(self, rng):
        cloud = PointCloud(points=rng.standard_normal((30, 2)))
        assert knn_graph_shortest_path(cloud, 4, 7, 7) == 0.0

    def test_dense_chain(self):
        pts = np.column_stack([np.linspace(0.0, 1.0, 50), np.zeros(50)])
        cloud = PointCloud(points=pts)
        d = knn_graph_shortest_path(cloud, 2, 0, 49)
        assert abs(d - 1.0) < 1e-12

    def test_semisphere_matches_great_circle(self):
        # k-NN graph paths overestimate geodesics by a zigzag overhead that
        # shrinks with k but not with density alone; at k=16 the mean over
        # moderate arcs sits inside 3%
        cloud = sample_semisphere(3000, seed=4)
        rng = np.random.Generator(np.random.Philox(key=77))
        rels = []
        while len(rels) < 6:
            i, j = (int(v) for v in rng.integers(0, 3000, size=2))
            if i == j:
                continue
            _, arc = great_circle(cloud.points[i], cloud.points[j])
            if not 0.5 <= arc < np.pi / 2:
                continue
            graph = knn_graph_shortest_path(cloud, 16, i, j)
            assert graph >= arc * 0.999  # never materially below the geodesic
            rels.append((graph - arc) / arc)
        assert np.mean(rels) < 0.03

    def test_disconnected_rejected(self, rng):
        pts = np.vstack([rng.random((20, 2)), rng.random((20, 2)) + 50.0])
        cloud = PointCloud(points=pts)
        with pytest.raises(ValueError, match="disconnected"):
            knn_graph_shortest_path(cloud, 3, 0, 39)


class TestCloudMetrics:
    def test_nearest_training_distance(self, rng):
        cloud = PointCloud(points=rng.standard_normal((100, 3)))
        # identical points: zero up to cancellation in the squared-norm formula
        assert nearest_training_distance(cloud.points[:10], cloud) < 1e-7

    def test_median_spacing_grid(self):
        xs = np.arange(10, dtype=float)
        pts = np.column_stack([xs, np.zeros(10)])
        assert median_nn_spacing(PointCloud(points=pts)) == 1.0
