"""Dense feed-forward networks in float64 numpy: forward, backprop, Adam, dropout.

Shared by the actor-critic local planner and the reachability estimator.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

_MAGIC = b"RLNN"
_VERSION = 1
_OUTPUTS = {"identity": 0, "tanh": 1}


class NeuralNet:
    """ReLU hidden layers, identity or tanh output, inverted dropout on hidden layers."""

    def __init__(self, layer_dims, output_activation="identity", dropout=0.0, seed=0, init=True):
        self.layer_dims = [int(d) for d in layer_dims]
        if len(self.layer_dims) < 2 or min(self.layer_dims) < 1:
            raise ValueError(f"bad layer_dims {layer_dims}")
        if output_activation not in _OUTPUTS:
            raise ValueError(f"unknown output activation {output_activation!r}")
        self.output_activation = output_activation
        n_hidden = len(self.layer_dims) - 2
        if np.isscalar(dropout):
            dropout = [float(dropout)] * n_hidden
        self.dropout = [float(p) for p in dropout]
        if len(self.dropout) != n_hidden or any(not 0.0 <= p < 1.0 for p in self.dropout):
            raise ValueError(f"dropout must give one probability in [0, 1) per hidden layer: {dropout}")
        self.weights = []
        self.biases = []
        if init:
            rng = np.random.default_rng(seed)
            for fan_in, fan_out in zip(self.layer_dims[:-1], self.layer_dims[1:]):
                limit = np.sqrt(6.0 / (fan_in + fan_out))
                self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
                self.biases.append(np.zeros(fan_out))

    @property
    def params(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "NeuralNet":
        net = NeuralNet(self.layer_dims, self.output_activation, self.dropout, init=False)
        net.weights = [w.copy() for w in self.weights]
        net.biases = [b.copy() for b in self.biases]
        return net

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.layer_dims[0]:
            raise ValueError(f"input dimension {x.shape[-1]} != {self.layer_dims[0]}")
        return x

    def forward(self, x, train_mode=False, rng=None, return_cache=False):
        x = self._check_input(x)
        single = x.ndim == 1
        a = x[None, :] if single else x
        cache = [a]
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            if k < last:
                a = np.maximum(z, 0.0)
                p = self.dropout[k]
                mask = None
                if train_mode and p > 0.0:
                    if rng is None:
                        raise ValueError("train_mode with dropout needs an rng")
                    mask = (rng.random(a.shape) >= p) / (1.0 - p)
                    a = a * mask
                cache.append((z, mask, a))
            else:
                a = np.tanh(z) if self.output_activation == "tanh" else z
                cache.append((z, None, a))
        out = a[0] if single else a
        return (out, cache) if return_cache else out

    __call__ = forward

    def backward(self, cache, grad_out):
        """Gradients of a scalar loss w.r.t. every parameter and the input.

        ``grad_out`` is dLoss/dOutput with the batch shape used in ``forward``.
        Returns ``(param_grads, grad_input)`` with ``param_grads`` ordered like ``params``.
        """
        g = np.asarray(grad_out, dtype=np.float64)
        if g.ndim == 1:
            g = g[None, :]
        n_layers = len(self.weights)
        grads = [None] * (2 * n_layers)
        z, _, a = cache[-1]
        if self.output_activation == "tanh":
            g = g * (1.0 - a * a)
        for k in range(n_layers - 1, -1, -1):
            a_prev = cache[k] if k == 0 else cache[k][2]
            grads[2 * k] = a_prev.T @ g
            grads[2 * k + 1] = g.sum(axis=0)
            g = g @ self.weights[k].T
            if k > 0:
                z_prev, mask, _ = cache[k]
                if mask is not None:
                    g = g * mask
                g = g * (z_prev > 0.0)
        return grads, g


def l2_loss_grad(net: NeuralNet, inputs, targets, train_mode=False, rng=None, l2_weight=0.0):
    """Mean squared error over the batch and its parameter gradients."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    t = np.asarray(targets, dtype=np.float64).reshape(x.shape[0], -1)
    y, cache = net.forward(x, train_mode=train_mode, rng=rng, return_cache=True)
    diff = y - t
    loss = float(np.mean(diff * diff))
    grads, _ = net.backward(cache, 2.0 * diff / diff.size)
    if l2_weight:
        for k, w in enumerate(net.weights):
            loss += 0.5 * l2_weight * float(np.sum(w * w))
            grads[2 * k] = grads[2 * k] + l2_weight * w
    return loss, grads


class Adam:
    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 256
    epochs: int = 100
    seed: int = 0
    l2_weight: float = 0.0
    optimizer: str = "adam"

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass
class TrainResult:
    net: NeuralNet
    losses: list = field(default_factory=list)


def train(net: NeuralNet, inputs, targets, cfg: TrainConfig) -> TrainResult:
    """Minibatch Adam on the L2 loss. Dropout is active during training."""
    x = np.asarray(inputs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64).reshape(x.shape[0], -1)
    if x.shape[1] != net.layer_dims[0]:
        raise ValueError(f"input dimension {x.shape[1]} != {net.layer_dims[0]}")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(net.params, learning_rate=cfg.learning_rate)
    losses = []
    n = x.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = l2_loss_grad(net, x[idx], t[idx], train_mode=True, rng=rng, l2_weight=cfg.l2_weight)
            if not np.isfinite(loss):
                raise FloatingPointError("training loss became non-finite")
            if cfg.learning_rate > 0:
                opt.step(grads)
            total += loss * len(idx)
        losses.append(total / n)
    return TrainResult(net, losses)


# ---------------------------------------------------------------- weight files


def save_weights(net: NeuralNet, path, metadata: dict | None = None) -> None:
    """Binary weight file plus a ``<path>.json`` metadata sidecar.

    Layout (little-endian): magic ``RLNN``, u32 version, u32 n_dims, u8 output
    activation, n_dims x u32 layer dims, (n_dims-2) x f64 dropout, then per
    layer the row-major (fan_in, fan_out) weights followed by the biases as f64.
    """
    path = Path(path)
    dims = net.layer_dims
    parts = [
        _MAGIC,
        struct.pack("<IIB", _VERSION, len(dims), _OUTPUTS[net.output_activation]),
        struct.pack(f"<{len(dims)}I", *dims),
        struct.pack(f"<{len(net.dropout)}d", *net.dropout),
    ]
    for w, b in zip(net.weights, net.biases):
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    path.write_bytes(b"".join(parts))
    meta = {"layer_dims": dims, "output_activation": net.output_activation, "dropout": net.dropout}
    meta.update(metadata or {})
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True))


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def load_weights(path) -> tuple[NeuralNet, dict]:
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: not a weight file")
    version, n_dims, out_code = struct.unpack_from("<IIB", data, 4)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    off = 4 + struct.calcsize("<IIB")
    dims = list(struct.unpack_from(f"<{n_dims}I", data, off))
    off += 4 * n_dims
    dropout = list(struct.unpack_from(f"<{n_dims - 2}d", data, off))
    off += 8 * (n_dims - 2)
    activation = {v: k for k, v in _OUTPUTS.items()}[out_code]
    net = NeuralNet(dims, activation, dropout, init=False)
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w = np.frombuffer(data, dtype="<f8", count=fan_in * fan_out, offset=off).reshape(fan_in, fan_out)
        off += 8 * fan_in * fan_out
        b = np.frombuffer(data, dtype="<f8", count=fan_out, offset=off)
        off += 8 * fan_out
        net.weights.append(w.astype(np.float64))
        net.biases.append(b.astype(np.float64))
    if off != len(data):
        raise ValueError(f"{path}: {len(data) - off} trailing bytes")
    side = sidecar_path(path)
    meta = json.loads(side.read_text()) if side.exists() else {}
    return net, meta


def train_config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)
