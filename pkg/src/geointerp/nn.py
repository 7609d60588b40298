"""Minimal multilayer-perceptron engine.

Forward evaluation, exact reverse-mode gradients with respect to parameters
and inputs, exact input Jacobians, and an adaptive-moment optimizer. Hidden
layers use a smooth activation (tanh or softplus); output layers are linear.
Smoothness matters here: downstream losses push finite-difference stencils
through these networks twice.
"""

import json
from dataclasses import dataclass

import numpy as np

from .datasets import rng_from_seed

ACTIVATIONS = ("tanh", "softplus")
CHECKPOINT_VERSION = 1


def _act(name, x):
    if name == "tanh":
        return np.tanh(x)
    # softplus, overflow-safe
    return np.logaddexp(0.0, x)


def _act_deriv(name, x):
    if name == "tanh":
        t = np.tanh(x)
        return 1.0 - t * t
    # sigmoid
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class MlpModel:
    """Layered affine + nonlinearity network; weights[l] maps layer l to l+1."""

    layer_sizes: list[int]
    activation: str
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    def check_finite(self):
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise RuntimeError(f"non-finite parameters in layer {l}")

    # thin method forms of the module operations, used for duck typing by
    # the loss module (test decoders implement the same three methods)
    def forward(self, x):
        return forward(self, x)

    def backward(self, x, upstream):
        return backward(self, x, upstream)

    def input_jacobian(self, z):
        return input_jacobian(self, z)


@dataclass
class GradientBundle:
    """Per-parameter gradients mirroring an MlpModel, plus the input gradient."""

    weight_grads: list[np.ndarray]
    bias_grads: list[np.ndarray]
    input_grad: np.ndarray | None = None


def init_mlp(layer_sizes, activation="tanh", seed=0) -> MlpModel:
    """Glorot-style scaled-uniform initialization from the seeded PRNG."""
    if len(layer_sizes) < 2:
        raise ValueError("need at least an input and an output layer")
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}; choose from {ACTIVATIONS}")
    rng = rng_from_seed(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(list(layer_sizes), activation, weights, biases)


def _forward_cached(model: MlpModel, x: np.ndarray):
    """Forward pass keeping pre-activations and hidden outputs for backprop."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.in_dim:
        raise ValueError(
            f"input has {x.shape[1]} columns, model expects {model.in_dim}"
        )
    nlayers = len(model.weights)
    hidden = [x]
    preacts = []
    h = x
    for l in range(nlayers):
        a = h @ model.weights[l] + model.biases[l]
        preacts.append(a)
        h = _act(model.activation, a) if l < nlayers - 1 else a
        hidden.append(h)
    return hidden, preacts


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Batched forward evaluation; rows of the output align with input rows."""
    hidden, _ = _forward_cached(model, x)
    return hidden[-1]


def backward(model: MlpModel, x: np.ndarray, upstream: np.ndarray) -> GradientBundle:
    """Exact reverse-mode gradients of <upstream, forward(x)>.

    Returns gradients with respect to every weight/bias and to the input
    batch itself (same shape as x).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.ndim == 1:
        upstream = upstream[None, :]
    hidden, preacts = _forward_cached(model, x)
    if upstream.shape != hidden[-1].shape:
        raise ValueError(
            f"upstream shape {upstream.shape} does not match output {hidden[-1].shape}"
        )
    nlayers = len(model.weights)
    weight_grads = [None] * nlayers
    bias_grads = [None] * nlayers
    delta = upstream
    for l in range(nlayers - 1, -1, -1):
        weight_grads[l] = hidden[l].T @ delta
        bias_grads[l] = delta.sum(axis=0)
        delta = delta @ model.weights[l].T
        if l > 0:
            delta = delta * _act_deriv(model.activation, preacts[l - 1])
    return GradientBundle(weight_grads, bias_grads, input_grad=delta)


def batch_jacobian(model: MlpModel, zs: np.ndarray) -> np.ndarray:
    """Exact input Jacobians at each row of zs, shape (n, out_dim, in_dim).

    One reverse sweep over a replicated batch: row i of each Jacobian is the
    input gradient under a one-hot upstream on output i, so this is exactly
    backward() specialised to identity upstreams.
    """
    zs = np.asarray(zs, dtype=np.float64)
    if zs.ndim == 1:
        zs = zs[None, :]
    npts = zs.shape[0]
    dout = model.out_dim
    x_rep = np.repeat(zs, dout, axis=0)
    upstream = np.tile(np.eye(dout), (npts, 1))
    g = backward(model, x_rep, upstream)
    return g.input_grad.reshape(npts, dout, model.in_dim)


def input_jacobian(model: MlpModel, z: np.ndarray) -> np.ndarray:
    """Jacobian of the network output with respect to one input point.

    One reverse sweep per output coordinate, so each row is bitwise equal to
    backward's input gradient under the matching one-hot upstream.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1:
        raise ValueError(f"input_jacobian expects a vector, got shape {z.shape}")
    dout = model.out_dim
    rows = []
    for i in range(dout):
        one_hot = np.zeros((1, dout))
        one_hot[0, i] = 1.0
        rows.append(backward(model, z[None, :], one_hot).input_grad[0])
    return np.stack(rows)


@dataclass
class AdamState:
    """First/second moment accumulators mirroring the model parameters."""

    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_model(cls, model: MlpModel) -> "AdamState":
        return cls(
            m_w=[np.zeros_like(w) for w in model.weights],
            v_w=[np.zeros_like(w) for w in model.weights],
            m_b=[np.zeros_like(b) for b in model.biases],
            v_b=[np.zeros_like(b) for b in model.biases],
        )


def adam_step(model: MlpModel, grads: GradientBundle, state: AdamState,
              lr=1e-3, betas=(0.9, 0.999), eps=1e-8) -> None:
    """One bias-corrected adaptive-moment update, in place on model and state."""
    b1, b2 = betas
    for g in grads.weight_grads + grads.bias_grads:
        if not np.all(np.isfinite(g)):
            raise RuntimeError("non-finite gradient passed to adam_step")
    state.t += 1
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for l in range(len(model.weights)):
        gw, gb = grads.weight_grads[l], grads.bias_grads[l]
        state.m_w[l] = b1 * state.m_w[l] + (1 - b1) * gw
        state.v_w[l] = b2 * state.v_w[l] + (1 - b2) * gw * gw
        state.m_b[l] = b1 * state.m_b[l] + (1 - b1) * gb
        state.v_b[l] = b2 * state.v_b[l] + (1 - b2) * gb * gb
        model.weights[l] -= lr * (state.m_w[l] / c1) / (np.sqrt(state.v_w[l] / c2) + eps)
        model.biases[l] -= lr * (state.m_b[l] / c1) / (np.sqrt(state.v_b[l] / c2) + eps)
    model.check_finite()


def model_to_dict(model: MlpModel) -> dict:
    return {
        "version": CHECKPOINT_VERSION,
        "layer_sizes": list(model.layer_sizes),
        "activation": model.activation,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }


def model_from_dict(doc: dict) -> MlpModel:
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    if doc["activation"] not in ACTIVATIONS:
        raise ValueError(f"unknown activation {doc['activation']!r} in checkpoint")
    weights = [np.asarray(w, dtype=np.float64) for w in doc["weights"]]
    biases = [np.asarray(b, dtype=np.float64) for b in doc["biases"]]
    model = MlpModel(list(doc["layer_sizes"]), doc["activation"], weights, biases)
    for l, (w, b) in enumerate(zip(weights, biases)):
        din, dout = model.layer_sizes[l], model.layer_sizes[l + 1]
        if w.shape != (din, dout) or b.shape != (dout,):
            raise ValueError(f"checkpoint layer {l} has inconsistent shapes")
    return model


def save_model(model: MlpModel, path) -> None:
    """JSON checkpoint; floats use repr so the round-trip is exact."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)


def load_model(path) -> MlpModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
