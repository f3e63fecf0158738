"""Embedders mapping a window of observations to per-step hidden features.

Three interchangeable kinds behind one forward contract:

* ``dilated_rnn`` -- stacked GRU cells whose recurrent state at step t
  comes from step t - dilation, one dilation per layer (skip
  connections for multi-scale context).
* ``gru`` -- plain stacked GRU.
* ``mlp_window`` -- a per-time-step MLP, the fast baseline.

All kinds are causal (h_t depends only on x_<=t), use tanh activations,
and start recurrent state at zero for each window. Forward exists in two
flavors that must agree: a tape version producing Nodes for training and
a numpy version for inference and per-epoch statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ConfigError

KINDS = ("dilated_rnn", "gru", "mlp_window")


@dataclass
class EmbedderConfig:
    kind: str = "dilated_rnn"
    input_dim: int = 1
    hidden_dim: int = 32
    layers: int = 2
    dilations: tuple = (1, 2)
    use_bias: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown embedder kind {self.kind!r}; expected one of {KINDS}")
        if self.input_dim < 1:
            raise ConfigError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.hidden_dim < 2:
            raise ConfigError(f"hidden_dim must be >= 2, got {self.hidden_dim}")
        if self.layers < 1:
            raise ConfigError(f"layers must be >= 1, got {self.layers}")
        self.dilations = tuple(int(d) for d in self.dilations)
        if self.kind == "dilated_rnn":
            if len(self.dilations) != self.layers:
                raise ConfigError(
                    f"need one dilation per layer: {len(self.dilations)} vs {self.layers}"
                )
            if self.dilations[0] != 1:
                raise ConfigError("first dilation must be 1")
            if any(b <= a for a, b in zip(self.dilations, self.dilations[1:])):
                raise ConfigError(f"dilations must be strictly increasing: {self.dilations}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "layers": self.layers,
            "dilations": list(self.dilations),
            "use_bias": self.use_bias,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EmbedderConfig":
        return cls(
            kind=d["kind"],
            input_dim=int(d["input_dim"]),
            hidden_dim=int(d["hidden_dim"]),
            layers=int(d["layers"]),
            dilations=tuple(d["dilations"]),
            use_bias=bool(d["use_bias"]),
        )


# Matrix names per layer. GRU gates: update z, reset r, candidate n.
_GRU_MATS = ("wz", "wr", "wn", "uz", "ur", "un")
_GRU_BIASES = ("bz", "br", "bn")


class EmbedderParams:
    """Per-layer parameter matrices registered as tape leaves.

    layers is a list of dicts mapping names to node matrices (weights)
    or node vectors (biases). Biases exist even when use_bias is False;
    they are then pinned at zero and excluded from the trainable set.
    """

    def __init__(self, config: EmbedderConfig, layers: list, tape: ad.Tape):
        self.config = config
        self.layers = layers
        self.tape = tape

    def weight_nodes(self):
        """Flat iterator over weight-matrix entries (regularizer scope)."""
        out = []
        for layer in self.layers:
            for name, mat in layer.items():
                if name.startswith("b"):
                    continue
                for row in mat:
                    out.extend(row)
        return out

    def bias_nodes(self):
        out = []
        for layer in self.layers:
            for name, vec in layer.items():
                if name.startswith("b"):
                    out.extend(vec)
        return out

    def trainable(self):
        nodes = self.weight_nodes()
        if self.config.use_bias:
            nodes.extend(self.bias_nodes())
        return nodes

    def snapshot(self) -> list:
        """Current values as numpy arrays, one dict per layer."""
        snap = []
        for layer in self.layers:
            d = {}
            for name, entry in layer.items():
                if name.startswith("b"):
                    d[name] = np.array([n.value for n in entry])
                else:
                    d[name] = np.array([[n.value for n in row] for row in entry])
            snap.append(d)
        return snap

    def load_snapshot(self, snap: list) -> None:
        if len(snap) != len(self.layers):
            raise ConfigError("snapshot layer count mismatch")
        for layer, d in zip(self.layers, snap):
            for name, entry in layer.items():
                arr = np.asarray(d[name], dtype=np.float64)
                if name.startswith("b"):
                    if len(entry) != arr.shape[0]:
                        raise ConfigError(f"snapshot shape mismatch for {name}")
                    for node, v in zip(entry, arr):
                        node.value = float(v)
                else:
                    if (len(entry), len(entry[0])) != arr.shape:
                        raise ConfigError(f"snapshot shape mismatch for {name}")
                    for row, vrow in zip(entry, arr):
                        for node, v in zip(row, vrow):
                            node.value = float(v)


def _layer_shapes(config: EmbedderConfig):
    """(name -> shape) per layer; biases get 1-D shapes."""
    d, f = config.input_dim, config.hidden_dim
    shapes = []
    for i in range(config.layers):
        in_dim = d if i == 0 else f
        if config.kind == "mlp_window":
            shapes.append({"w": (f, in_dim), "b": (f,)})
        else:
            layer = {}
            for name in _GRU_MATS:
                layer[name] = (f, in_dim) if name.startswith("w") else (f, f)
            for name in _GRU_BIASES:
                layer[name] = (f,)
            shapes.append(layer)
    return shapes


def init_params(config: EmbedderConfig, seed: int, tape: ad.Tape) -> EmbedderParams:
    """Seeded uniform init in [-a, a] with a = sqrt(1 / fan_in)."""
    rng = np.random.default_rng(seed)
    layers = []
    for shapes in _layer_shapes(config):
        layer = {}
        for name, shape in shapes.items():
            if name.startswith("b"):
                fan_in = shape[0]
                bound = math.sqrt(1.0 / fan_in)
                if config.use_bias:
                    vals = rng.uniform(-bound, bound, size=shape)
                else:
                    vals = np.zeros(shape)
                layer[name] = tape.leaf_vector(vals)
            else:
                bound = math.sqrt(1.0 / shape[1])
                vals = rng.uniform(-bound, bound, size=shape)
                layer[name] = tape.leaf_matrix(vals)
        layers.append(layer)
    return EmbedderParams(config, layers, tape)


# -- tape forward ------------------------------------------------------------


def _const_vector(tape, n):
    return [tape.const(0.0) for _ in range(n)]


def _gru_cell(layer, x, h_prev):
    """One GRU step on the tape; returns the new hidden node vector."""
    f = len(layer["bz"])
    wz = ad.matvec(layer["wz"], x)
    wr = ad.matvec(layer["wr"], x)
    wn = ad.matvec(layer["wn"], x)
    uz = ad.matvec(layer["uz"], h_prev)
    ur = ad.matvec(layer["ur"], h_prev)
    un = ad.matvec(layer["un"], h_prev)
    h_new = []
    for i in range(f):
        z = ad.sigmoid(wz[i] + uz[i] + layer["bz"][i])
        r = ad.sigmoid(wr[i] + ur[i] + layer["br"][i])
        n = ad.tanh(wn[i] + r * un[i] + layer["bn"][i])
        h_new.append((1.0 - z) * n + z * h_prev[i])
    return h_new


def forward(window: np.ndarray, params: EmbedderParams):
    """Embed a win x d window into a win x f list of node vectors."""
    window = np.asarray(window, dtype=np.float64)
    config = params.config
    if window.ndim != 2 or window.shape[1] != config.input_dim:
        raise ConfigError(
            f"window shape {window.shape} incompatible with input_dim={config.input_dim}"
        )
    tape = params.tape
    f = config.hidden_dim

    inputs = [[tape.const(v) for v in row] for row in window]
    if config.kind == "mlp_window":
        H = []
        for x in inputs:
            h = x
            for layer in params.layers:
                pre = ad.matvec(layer["w"], h)
                h = [ad.tanh(pre[i] + layer["b"][i]) for i in range(f)]
            H.append(h)
        return H

    dilations = config.dilations if config.kind == "dilated_rnn" else (1,) * config.layers
    states = inputs
    zero = _const_vector(tape, f)
    for layer, dil in zip(params.layers, dilations):
        outputs = []
        for t, x in enumerate(states):
            h_prev = outputs[t - dil] if t - dil >= 0 else zero
            outputs.append(_gru_cell(layer, x, h_prev))
        states = outputs
    return states


# -- numpy forward -----------------------------------------------------------


def _sigmoid_np(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _gru_cell_np(layer, x, h_prev):
    z = _sigmoid_np(layer["wz"] @ x + layer["uz"] @ h_prev + layer["bz"])
    r = _sigmoid_np(layer["wr"] @ x + layer["ur"] @ h_prev + layer["br"])
    n = np.tanh(layer["wn"] @ x + r * (layer["un"] @ h_prev) + layer["bn"])
    return (1.0 - z) * n + z * h_prev


def forward_values(window: np.ndarray, config: EmbedderConfig, snapshot: list) -> np.ndarray:
    """Numpy twin of forward; returns a win x f array."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2 or window.shape[1] != config.input_dim:
        raise ConfigError(
            f"window shape {window.shape} incompatible with input_dim={config.input_dim}"
        )
    win = window.shape[0]
    f = config.hidden_dim

    if config.kind == "mlp_window":
        H = window
        for layer in snapshot:
            H = np.tanh(H @ layer["w"].T + layer["b"])
        return H

    dilations = config.dilations if config.kind == "dilated_rnn" else (1,) * config.layers
    states = window
    for layer, dil in zip(snapshot, dilations):
        outputs = np.zeros((win, f))
        for t in range(win):
            h_prev = outputs[t - dil] if t - dil >= 0 else np.zeros(f)
            outputs[t] = _gru_cell_np(layer, states[t], h_prev)
        states = outputs
    return states
