"""Manifold reconstruction and uniform-speed geodesic interpolation.

A geometry-regularized autoencoder flattens a sampled data manifold into a
convex latent chart, and an endpoint-constrained cubic latent curve is then
trained under constant-speed, geodesic, and minimizing losses so its decoded
image is a uniform-speed minimizing geodesic between two data samples.
"""

from .autoencoder import AeModel, AeTrainConfig, ae_loss, train_ae
from .curve import CubicCurve, curve_accel, curve_eval, curve_velocity
from .datasets import (PointCloud, SwissRollParams, load_csv, sample_semisphere,
                       sample_swissroll, save_csv)
from .linalg import EigenResult, knn, matmul, smallest_eigenpairs, sym_eig
from .losses import (BatchSpec, CurveBatch, CurveTrainConfig, LossWeights,
                     l_conspeed, l_geo, l_min, make_curve_batch, second_diff,
                     speed_norm, total_loss, total_loss_grad, train_curve)
from .ltsa import Embedding, LtsaConfig, alignment_matrix, ltsa_embed
from .nn import (AdamState, GradientBundle, MlpModel, adam_step, backward,
                 forward, init_mlp, input_jacobian)
from .oracle import (GeodesicReport, great_circle, knn_graph_shortest_path,
                     polyline_length, procrustes_affine, swissroll_geodesic,
                     tangential_residual, uniformity_cv)

__version__ = "0.1.0"
