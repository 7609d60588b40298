"""Geometry-regularized autoencoder training.

The encoder and decoder are trained jointly under three terms: plain
reconstruction, a latent pull toward the precomputed geometric embedding,
and reconstruction from that embedding. The latent prior is what flattens
the chart; the decoder relearns the curvature the chart discards.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import nn
from .datasets import PointCloud, rng_from_seed
from .ltsa import Embedding

_TINY = 1e-12
AE_CHECKPOINT_VERSION = 1


@dataclass
class AeTrainConfig:
    latent_dim: int = 2
    epochs: int = 1500
    batch_size: int = 256
    lr: float = 1e-3
    w_rec: float = 1.0
    w_lat: float = 1.0
    w_dec: float = 1.0
    seed: int = 0
    hidden: tuple = (96, 96)
    activation: str = "tanh"
    # squared Frobenius terms optimize smoothly; plain norms have a gradient
    # singularity at zero, so they are the reporting companion, not the default
    squared: bool = True

    def validate(self):
        if self.latent_dim < 1:
            raise ValueError(f"latent_dim must be >= 1, got {self.latent_dim}")
        w = (self.w_rec, self.w_lat, self.w_dec)
        if any(x < 0 for x in w):
            raise ValueError(f"loss weights must be nonnegative, got {w}")
        if all(x == 0 for x in w):
            raise ValueError("weights all zero")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


@dataclass
class AeModel:
    encoder: nn.MlpModel
    decoder: nn.MlpModel

    def __post_init__(self):
        if self.encoder.out_dim != self.decoder.in_dim:
            raise ValueError(
                f"encoder output dim {self.encoder.out_dim} != decoder input "
                f"dim {self.decoder.in_dim}"
            )

    @property
    def latent_dim(self) -> int:
        return self.encoder.out_dim

    def encode(self, x):
        return nn.forward(self.encoder, x)

    def decode(self, z):
        return nn.forward(self.decoder, z)


def init_autoencoder(x: np.ndarray, ml: np.ndarray, cfg: AeTrainConfig) -> AeModel:
    """Glorot-initialized encoder/decoder with data standardization baked in.

    Rather than carrying explicit normalization layers, the first layer of
    each network absorbs the input shift/scale and the last layer emits the
    target shift/scale, so the models stay plain MLPs operating in raw
    coordinates while starting as well-conditioned as standardized ones.
    """
    d_amb = x.shape[1]
    d = cfg.latent_dim
    enc_sizes = [d_amb, *cfg.hidden, d]
    dec_sizes = [d, *cfg.hidden, d_amb]
    encoder = nn.init_mlp(enc_sizes, cfg.activation, seed=cfg.seed)
    decoder = nn.init_mlp(dec_sizes, cfg.activation, seed=cfg.seed + 1)

    mu_x = x.mean(axis=0)
    sd_x = np.maximum(x.std(axis=0), 1e-8)
    mu_z = ml.mean(axis=0)
    sd_z = np.maximum(ml.std(axis=0), 1e-8)

    # encoder: standardize ambient in, destandardize latent out
    encoder.weights[0] = encoder.weights[0] / sd_x[:, None]
    encoder.biases[0] = encoder.biases[0] - mu_x @ encoder.weights[0]
    encoder.weights[-1] = encoder.weights[-1] * sd_z[None, :]
    encoder.biases[-1] = encoder.biases[-1] * sd_z + mu_z
    # decoder: the reverse
    decoder.weights[0] = decoder.weights[0] / sd_z[:, None]
    decoder.biases[0] = decoder.biases[0] - mu_z @ decoder.weights[0]
    decoder.weights[-1] = decoder.weights[-1] * sd_x[None, :]
    decoder.biases[-1] = decoder.biases[-1] * sd_x + mu_x
    return AeModel(encoder=encoder, decoder=decoder)


def ae_loss(model: AeModel, x: np.ndarray, ml: np.ndarray, cfg: AeTrainConfig):
    """Three-term loss over a batch; returns (total, per-term breakdown).

    Each term is the Frobenius norm over the batch of its residual matrix:
    reconstruction D(E(x)) - x, latent pull E(x) - ML(x), and prior-path
    reconstruction D(ML(x)) - x. The total uses squared norms when
    cfg.squared is set; the breakdown always carries both forms.
    """
    x = np.asarray(x, dtype=np.float64)
    ml = np.asarray(ml, dtype=np.float64)
    if x.shape[0] != ml.shape[0]:
        raise ValueError(f"batch rows {x.shape[0]} != embedding rows {ml.shape[0]}")
    z = model.encode(x)
    rec = float(np.linalg.norm(model.decode(z) - x))
    lat = float(np.linalg.norm(z - ml))
    dec = float(np.linalg.norm(model.decode(ml) - x))
    total_norm = cfg.w_rec * rec + cfg.w_lat * lat + cfg.w_dec * dec
    total_sq = cfg.w_rec * rec ** 2 + cfg.w_lat * lat ** 2 + cfg.w_dec * dec ** 2
    total = total_sq if cfg.squared else total_norm
    breakdown = {"rec": rec, "lat": lat, "dec": dec,
                 "total_norm": total_norm, "total_sq": total_sq, "total": total}
    return total, breakdown


def _residual_upstream(residual, weight, squared):
    if weight == 0:
        return np.zeros_like(residual)
    if squared:
        return 2.0 * weight * residual
    norm = np.linalg.norm(residual)
    return weight * residual / max(norm, _TINY)


@dataclass
class AeTrainResult:
    model: AeModel
    history: list
    final_rmse: float


def train_ae(cloud: PointCloud, embedding: Embedding, cfg: AeTrainConfig) -> AeTrainResult:
    """Train the autoencoder on a cloud with its row-aligned prior embedding.

    Mini-batches are drawn without replacement each epoch from the seeded
    PRNG, so identical inputs give identical final parameters. Raises on a
    non-finite loss, naming the epoch.
    """
    cfg.validate()
    x = cloud.points
    ml = embedding.coords
    if x.shape[0] != ml.shape[0]:
        raise ValueError(f"cloud has {x.shape[0]} rows, embedding has {ml.shape[0]}")
    if ml.shape[1] != cfg.latent_dim:
        raise ValueError(
            f"embedding dimension {ml.shape[1]} != configured latent_dim {cfg.latent_dim}"
        )
    model = init_autoencoder(x, ml, cfg)
    if cfg.epochs == 0:
        return AeTrainResult(model=model, history=[], final_rmse=_rmse(model, x))

    rng = rng_from_seed(cfg.seed)
    n = x.shape[0]
    bs = min(cfg.batch_size, n)
    enc_state = nn.AdamState.for_model(model.encoder)
    dec_state = nn.AdamState.for_model(model.decoder)
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        sums = {"rec": 0.0, "lat": 0.0, "dec": 0.0, "total": 0.0}
        nbatches = 0
        for start in range(0, n, bs):
            rows = order[start:start + bs]
            xb, mlb = x[rows], ml[rows]

            z = model.encode(xb)
            xr = model.decode(z)
            xp = model.decode(mlb)

            up_rec = _residual_upstream(xr - xb, cfg.w_rec, cfg.squared)
            up_lat = _residual_upstream(z - mlb, cfg.w_lat, cfg.squared)
            up_dec = _residual_upstream(xp - xb, cfg.w_dec, cfg.squared)

            dec_g1 = nn.backward(model.decoder, z, up_rec)
            dec_g2 = nn.backward(model.decoder, mlb, up_dec)
            enc_g = nn.backward(model.encoder, xb, dec_g1.input_grad + up_lat)

            dec_grads = nn.GradientBundle(
                [g1 + g2 for g1, g2 in zip(dec_g1.weight_grads, dec_g2.weight_grads)],
                [g1 + g2 for g1, g2 in zip(dec_g1.bias_grads, dec_g2.bias_grads)],
            )
            nn.adam_step(model.decoder, dec_grads, dec_state, lr=cfg.lr)
            nn.adam_step(model.encoder, enc_g, enc_state, lr=cfg.lr)

            total, breakdown = _batch_terms(xb, mlb, z, xr, xp, cfg)
            if not np.isfinite(total):
                raise RuntimeError(f"autoencoder training diverged at epoch {epoch}")
            for key in sums:
                sums[key] += breakdown[key] if key != "total" else total
            nbatches += 1
        history.append({"epoch": epoch, **{k: v / nbatches for k, v in sums.items()}})
    return AeTrainResult(model=model, history=history, final_rmse=_rmse(model, x))


def _batch_terms(xb, mlb, z, xr, xp, cfg):
    rec = float(np.linalg.norm(xr - xb))
    lat = float(np.linalg.norm(z - mlb))
    dec = float(np.linalg.norm(xp - xb))
    if cfg.squared:
        total = cfg.w_rec * rec ** 2 + cfg.w_lat * lat ** 2 + cfg.w_dec * dec ** 2
    else:
        total = cfg.w_rec * rec + cfg.w_lat * lat + cfg.w_dec * dec
    return total, {"rec": rec, "lat": lat, "dec": dec}


def _rmse(model: AeModel, x: np.ndarray) -> float:
    err = model.decode(model.encode(x)) - x
    return float(np.sqrt(np.mean(np.sum(err * err, axis=1))))


def save_autoencoder(model: AeModel, path) -> None:
    doc = {
        "version": AE_CHECKPOINT_VERSION,
        "encoder": nn.model_to_dict(model.encoder),
        "decoder": nn.model_to_dict(model.decoder),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_autoencoder(path) -> AeModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != AE_CHECKPOINT_VERSION:
        raise ValueError(f"unsupported autoencoder checkpoint version {doc.get('version')!r}")
    return AeModel(
        encoder=nn.model_from_dict(doc["encoder"]),
        decoder=nn.model_from_dict(doc["decoder"]),
    )
