"""Sequence model: stacked LSTM with MLP state encoders and a linear head.

The network maps a per-step input sequence (drive values and time) plus a
static conditioning vector (first moments of the initial state) to a per-step
output sequence.  Both mapping directions of the package use this same
architecture; only the input and output widths differ.

Parameters live in a flat ``dict[str, np.ndarray]``:

    ench_W0, ench_b0, ...   affine layers of the h0 encoder
    encc_W0, encc_b0, ...   affine layers of the c0 encoder
    l{i}_Wf, l{i}_bf, ...   per-gate LSTM weights, gates f, i, g, o
    head_W, head_b          linear readout

Gate pre-activations act on ``[h, x]`` concatenated in that order, so each
gate weight has shape (hidden + layer_input, hidden).  Forward passes fuse
the four gate matrices into one GEMM; gradients are split back so the stored
parameterization stays per-gate.  Every layer starts from the same encoder
output (h0, c0).

All gradients are exact backpropagation through time, validated against
central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit as sigmoid

from ..errors import ConfigError

GATES = "figo"  # concatenation order everywhere


@dataclass(frozen=True)
class ModelConfig:
    input_width: int
    output_width: int
    moment_width: int
    hidden_size: int = 128
    n_layers: int = 2
    encoder_layers: int = 2

    def __post_init__(self):
        for name in ("input_width", "output_width", "moment_width", "hidden_size", "n_layers", "encoder_layers"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")

    def to_dict(self) -> dict:
        return {
            "input_width": self.input_width,
            "output_width": self.output_width,
            "moment_width": self.moment_width,
            "hidden_size": self.hidden_size,
            "n_layers": self.n_layers,
            "encoder_layers": self.encoder_layers,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**{k: int(v) for k, v in d.items()})


def _uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_params(config: ModelConfig, rng: np.random.Generator) -> dict:
    """Draw initial parameters in a fixed key order so seeds are reproducible.

    Weights are U(-1/sqrt(fan_in), +1/sqrt(fan_in)); biases start at zero
    except the forget gate, which starts at +1 so early training does not
    flush the cell state.
    """
    h = config.hidden_size
    params: dict[str, np.ndarray] = {}
    for tag in ("ench", "encc"):
        width_in = config.moment_width
        for j in range(config.encoder_layers):
            params[f"{tag}_W{j}"] = _uniform(rng, width_in, (width_in, h))
            params[f"{tag}_b{j}"] = np.zeros(h)
            width_in = h
    for i in range(config.n_layers):
        layer_in = config.input_width if i == 0 else h
        fan_in = h + layer_in
        for gate in GATES:
            params[f"l{i}_W{gate}"] = _uniform(rng, fan_in, (fan_in, h))
            params[f"l{i}_b{gate}"] = np.ones(h) if gate == "f" else np.zeros(h)
    params["head_W"] = _uniform(rng, h, (h, config.output_width))
    params["head_b"] = np.zeros(config.output_width)
    return params


def _encoder_forward(params: dict, tag: str, n_layers: int, o0: np.ndarray):
    """tanh MLP with a linear last layer; returns output and per-layer inputs."""
    act = o0
    inputs, preacts = [], []
    for j in range(n_layers):
        inputs.append(act)
        z = act @ params[f"{tag}_W{j}"] + params[f"{tag}_b{j}"]
        preacts.append(z)
        act = z if j == n_layers - 1 else np.tanh(z)
    return act, {"inputs": inputs, "preacts": preacts}


def _encoder_backward(params: dict, tag: str, n_layers: int, cache: dict, d_out: np.ndarray, grads: dict):
    d = d_out
    for j in reversed(range(n_layers)):
        if j != n_layers - 1:
            d = d * (1.0 - np.tanh(cache["preacts"][j]) ** 2)
        grads[f"{tag}_W{j}"] = cache["inputs"][j].T @ d
        grads[f"{tag}_b{j}"] = d.sum(axis=0)
        d = d @ params[f"{tag}_W{j}"].T


def encode_initial_state(params: dict, config: ModelConfig, o0: np.ndarray):
    """Map first moments of the initial state to (h0, c0).

    The same pair initializes every LSTM layer.
    """
    o0 = np.asarray(o0, dtype=float)
    h0, _ = _encoder_forward(params, "ench", config.encoder_layers, o0)
    c0, _ = _encoder_forward(params, "encc", config.encoder_layers, o0)
    return h0, c0


def lstm_cell_forward(params: dict, layer: int, x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray):
    """One LSTM step for one layer.  Returns (h, c, gates) with gates
    post-activation, concatenated (batch, 4*hidden) in f,i,g,o order."""
    w = np.concatenate([params[f"l{layer}_W{g}"] for g in GATES], axis=1)
    b = np.concatenate([params[f"l{layer}_b{g}"] for g in GATES])
    hdim = h_prev.shape[-1]
    z = np.concatenate([h_prev, x_t], axis=-1) @ w + b
    f = sigmoid(z[..., :hdim])
    i = sigmoid(z[..., hdim : 2 * hdim])
    g = np.tanh(z[..., 2 * hdim : 3 * hdim])
    o = sigmoid(z[..., 3 * hdim :])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c, np.concatenate([f, i, g, o], axis=-1)


def model_forward(params: dict, config: ModelConfig, x: np.ndarray, o0: np.ndarray):
    """Batched forward pass.

    x   (batch, T, input_width) per-step inputs
    o0  (batch, moment_width)   conditioning vector

    Returns (y, cache) with y of shape (batch, T, output_width).  The cache
    holds everything the exact backward pass needs.
    """
    x = np.asarray(x, dtype=float)
    o0 = np.asarray(o0, dtype=float)
    if x.ndim != 3 or x.shape[2] != config.input_width:
        raise ConfigError(f"x must be (batch, T, {config.input_width}), got {x.shape}")
    if o0.shape != (x.shape[0], config.moment_width):
        raise ConfigError(f"o0 must be (batch, {config.moment_width}), got {o0.shape}")
    batch, T, _ = x.shape
    hdim = config.hidden_size

    h0, ench_cache = _encoder_forward(params, "ench", config.encoder_layers, o0)
    c0, encc_cache = _encoder_forward(params, "encc", config.encoder_layers, o0)

    layer_caches = []
    seq = x
    for i in range(config.n_layers):
        w = np.concatenate([params[f"l{i}_W{g}"] for g in GATES], axis=1)
        b = np.concatenate([params[f"l{i}_b{g}"] for g in GATES])
        # input contribution for every step in one GEMM; recurrent part steps
        zx = seq @ w[hdim:] + b
        wh = np.ascontiguousarray(w[:hdim])
        gates = np.empty((batch, T, 4 * hdim))
        h_seq = np.empty((batch, T + 1, hdim))
        c_seq = np.empty((batch, T + 1, hdim))
        h_seq[:, 0] = h0
        c_seq[:, 0] = c0
        h, c = h0, c0
        for t in range(T):
            z = h @ wh + zx[:, t]
            f = sigmoid(z[:, :hdim])
            ig = sigmoid(z[:, hdim : 2 * hdim])
            g = np.tanh(z[:, 2 * hdim : 3 * hdim])
            o = sigmoid(z[:, 3 * hdim :])
            c = f * c + ig * g
            h = o * np.tanh(c)
            gates[:, t, :hdim] = f
            gates[:, t, hdim : 2 * hdim] = ig
            gates[:, t, 2 * hdim : 3 * hdim] = g
            gates[:, t, 3 * hdim :] = o
            h_seq[:, t + 1] = h
            c_seq[:, t + 1] = c
        layer_caches.append({"in_seq": seq, "gates": gates, "h_seq": h_seq, "c_seq": c_seq})
        seq = h_seq[:, 1:]

    y = seq @ params["head_W"] + params["head_b"]
    cache = {
        "x": x,
        "o0": o0,
        "ench": ench_cache,
        "encc": encc_cache,
        "layers": layer_caches,
        "top_h": seq,
    }
    return y, cache


def model_backward(params: dict, config: ModelConfig, cache: dict, dy: np.ndarray) -> dict:
    """Exact gradients of a scalar loss with upstream derivative dy.

    dy has the shape of the forward output.  Returns a dict matching the
    parameter dict key for key and shape for shape.
    """
    hdim = config.hidden_size
    batch, T, _ = dy.shape
    grads: dict[str, np.ndarray] = {}

    top_h = cache["top_h"]
    grads["head_W"] = np.einsum("btk,bto->ko", top_h, dy)
    grads["head_b"] = dy.sum(axis=(0, 1))
    dh_above = dy @ params["head_W"].T  # (batch, T, hidden)

    dh0_total = np.zeros((batch, hdim))
    dc0_total = np.zeros((batch, hdim))
    for i in reversed(range(config.n_layers)):
        lc = cache["layers"][i]
        in_seq, gates, h_seq, c_seq = lc["in_seq"], lc["gates"], lc["h_seq"], lc["c_seq"]
        w = np.concatenate([params[f"l{i}_W{g}"] for g in GATES], axis=1)
        dw = np.zeros_like(w)
        db = np.zeros(4 * hdim)
        dz_seq = np.empty((batch, T, 4 * hdim))
        dh = np.zeros((batch, hdim))
        dc = np.zeros((batch, hdim))
        wh_t = np.ascontiguousarray(w[:hdim].T)
        for t in reversed(range(T)):
            dh = dh + dh_above[:, t]
            f = gates[:, t, :hdim]
            ig = gates[:, t, hdim : 2 * hdim]
            g = gates[:, t, 2 * hdim : 3 * hdim]
            o = gates[:, t, 3 * hdim :]
            tanh_c = np.tanh(c_seq[:, t + 1])
            do = dh * tanh_c
            dc = dc + dh * o * (1.0 - tanh_c**2)
            df = dc * c_seq[:, t]
            di = dc * g
            dg = dc * ig
            dz = dz_seq[:, t]
            dz[:, :hdim] = df * f * (1.0 - f)
            dz[:, hdim : 2 * hdim] = di * ig * (1.0 - ig)
            dz[:, 2 * hdim : 3 * hdim] = dg * (1.0 - g**2)
            dz[:, 3 * hdim :] = do * o * (1.0 - o)
            dh = dz @ wh_t
            dc = dc * f
        # weight gradients in two bulk GEMMs: recurrent rows see h_{t-1},
        # input rows see x_t
        flat_dz = dz_seq.reshape(batch * T, 4 * hdim)
        dw[:hdim] = h_seq[:, :T].reshape(batch * T, hdim).T @ flat_dz
        dw[hdim:] = in_seq.reshape(batch * T, -1).T @ flat_dz
        db = flat_dz.sum(axis=0)
        dh_above = dz_seq @ w[hdim:].T  # gradient w.r.t. this layer's inputs
        dh0_total += dh
        dc0_total += dc
        for k, gate in enumerate(GATES):
            grads[f"l{i}_W{gate}"] = dw[:, k * hdim : (k + 1) * hdim]
            grads[f"l{i}_b{gate}"] = db[k * hdim : (k + 1) * hdim]

    _encoder_backward(params, "ench", config.encoder_layers, cache["ench"], dh0_total, grads)
    _encoder_backward(params, "encc", config.encoder_layers, cache["encc"], dc0_total, grads)
    return grads


def mse_loss(y_pred: np.ndarray, y_true: np.ndarray) -> float:
    diff = y_pred - y_true
    return float(np.mean(diff * diff))


def mse_grad(y_pred: np.ndarray, y_true: np.ndarray) -> np.ndarray:
    return 2.0 * (y_pred - y_true) / y_pred.size
