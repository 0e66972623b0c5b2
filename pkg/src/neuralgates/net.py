"""A small dense feed-forward network written directly on numpy.

Samples are rows: a batch is an ``(N, 64)`` array holding row-major flattened
8x8 matrices. A layer computes ``act(x @ W.T + b)`` with ``W`` of shape
``(out, in)``.
"""
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .errors import BadShape, CorruptWeights, Diverged, MissingWeights

ACTIVATIONS = ("linear", "relu")
FORMAT_NAME = "neuralgates-weights"
FORMAT_VERSION = 1


@dataclass
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    activation: str = "linear"

    @property
    def shape(self):
        return self.weights.shape


@dataclass
class Network:
    layers: List[Layer]

    @property
    def dims(self):
        return [self.layers[0].weights.shape[1]] + [l.weights.shape[0] for l in self.layers]

    @property
    def activations(self):
        return [l.activation for l in self.layers]

    def params(self):
        """Flat list ``[W0, b0, W1, b1, ...]`` of the (mutable) parameter arrays."""
        out = []
        for layer in self.layers:
            out.extend([layer.weights, layer.bias])
        return out

    def copy(self):
        return Network([Layer(l.weights.copy(), l.bias.copy(), l.activation) for l in self.layers])

    def __call__(self, x):
        return forward(self, x)


def _check_shape(dims, activations):
    dims = [int(d) for d in dims]
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise BadShape(f"need at least two positive layer sizes, got {dims}")
    if len(activations) != len(dims) - 1:
        raise BadShape(f"{len(dims) - 1} layers but {len(activations)} activations")
    for act in activations:
        if act not in ACTIVATIONS:
            raise BadShape(f"unknown activation {act!r}")
    return dims


def init_network(dims: Sequence[int], activations=None, seed: int = 0) -> Network:
    """Glorot-uniform weights, zero biases.

    ``activations`` defaults to linear everywhere; a single string applies to
    every hidden layer while the output layer stays linear.
    """
    if activations is None:
        activations = "linear"
    if isinstance(activations, str):
        activations = [activations] * (len(dims) - 2) + ["linear"]
    dims = _check_shape(dims, list(activations))
    rng = np.random.default_rng(seed)
    layers = []
    for n_in, n_out, act in zip(dims[:-1], dims[1:], activations):
        limit = math.sqrt(6.0 / (n_in + n_out))
        w = rng.uniform(-limit, limit, size=(n_out, n_in))
        layers.append(Layer(w, np.zeros(n_out), act))
    return Network(layers)


def _activate(z, act):
    if act == "relu":
        return np.maximum(z, 0.0)
    return z


def forward(net: Network, x):
    """Evaluate the network on one 64-vector or on a batch of rows."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    h = x[None, :] if single else x
    for layer in net.layers:
        h = _activate(h @ layer.weights.T + layer.bias, layer.activation)
    return h[0] if single else h


def loss_mse(outputs, targets):
    """Mean over samples of the squared Frobenius distance (summed over all entries)."""
    outputs = np.asarray(outputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if outputs.shape != targets.shape:
        raise BadShape(f"outputs {outputs.shape} vs targets {targets.shape}")
    n = outputs.shape[0]
    diff = (outputs - targets).reshape(n, -1)
    return float(np.sum(diff * diff) / n)


def backward(net: Network, batch, targets):
    """Loss and exact gradients of :func:`loss_mse` for the given batch.

    Returns ``(loss, grads)`` with ``grads`` ordered like ``net.params()``.
    The relu derivative is taken as 0 at 0.
    """
    x = np.asarray(batch, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        raise BadShape("empty batch")
    inputs, pre = [], []
    h = x
    for layer in net.layers:
        inputs.append(h)
        z = h @ layer.weights.T + layer.bias
        pre.append(z)
        h = _activate(z, layer.activation)
    diff = h - y
    loss = float(np.sum(diff * diff) / n)
    delta = (2.0 / n) * diff
    grads = [None] * (2 * len(net.layers))
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        if layer.activation == "relu":
            delta = delta * (pre[i] > 0.0)
        grads[2 * i] = delta.T @ inputs[i]
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            delta = delta @ layer.weights
    return loss, grads


# -- optimizers -------------------------------------------------------------

class Adagrad:
    """``G += g**2; theta -= lr * g / (sqrt(G) + eps)``."""

    name = "adagrad"

    def __init__(self, params, lr=0.01, eps=1e-8):
        self.lr = lr
        self.eps = eps
        self.accum = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        for p, g, acc in zip(params, grads, self.accum):
            acc += g * g
            p -= self.lr * g / (np.sqrt(acc) + self.eps)
        return params


class Adadelta:
    """Zeiler's AdaDelta: unit-free updates from running RMS of gradients and steps."""

    name = "adadelta"

    def __init__(self, params, rho=0.95, eps=1e-6):
        self.rho = rho
        self.eps = eps
        self.avg_sq_grad = [np.zeros_like(p) for p in params]
        self.avg_sq_delta = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        rho, eps = self.rho, self.eps
        for p, g, eg, ed in zip(params, grads, self.avg_sq_grad, self.avg_sq_delta):
            eg *= rho
            eg += (1.0 - rho) * g * g
            delta = -np.sqrt(ed + eps) / np.sqrt(eg + eps) * g
            ed *= rho
            ed += (1.0 - rho) * delta * delta
            p += delta
        return params


def adagrad_step(state: Adagrad, params, grads):
    return state.step(params, grads)


def adadelta_step(state: Adadelta, params, grads):
    return state.step(params, grads)


# -- training ---------------------------------------------------------------

@dataclass
class TrainConfig:
    """Hyperparameters of one training run.

    ``batch_schedule`` overrides ``batch_size``: the epochs are split evenly
    across the listed batch sizes in order (any remainder goes to the last).
    ``record_epochs`` limits metric evaluation to those epochs; ``None``
    records every epoch.
    """

    epochs: int = 500
    batch_size: int = 1000
    batch_schedule: Optional[List[int]] = None
    optimizer: str = "adagrad"
    lr: float = 0.01
    rho: float = 0.95
    eps: Optional[float] = None
    seed: int = 1
    record_epochs: Optional[List[int]] = None
    wall_time: bool = False

    def as_dict(self):
        return asdict(self)

    def batch_sizes(self):
        """Batch size used in each epoch (1-based list index = epoch - 1)."""
        if not self.batch_schedule:
            return [int(self.batch_size)] * self.epochs
        sizes = [int(b) for b in self.batch_schedule]
        per = self.epochs // len(sizes)
        out = []
        for i, b in enumerate(sizes):
            count = per if i < len(sizes) - 1 else self.epochs - per * (len(sizes) - 1)
            out.extend([b] * count)
        return out

    def make_optimizer(self, params):
        if self.optimizer == "adagrad":
            return Adagrad(params, lr=self.lr, eps=1e-8 if self.eps is None else self.eps)
        if self.optimizer == "adadelta":
            return Adadelta(params, rho=self.rho, eps=1e-6 if self.eps is None else self.eps)
        raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class EpochRecord:
    """Held-out loss and quantum-constraint metrics after one epoch."""

    index: int
    loss: float
    trace_residual_max: float
    trace_residual_mean: float
    antiherm_max: float
    antiherm_mean: float
    min_eig: float
    wall_ms: float = 0.0
    train_loss: float = float("nan")


def evaluate_outputs(outputs, targets, index=0, wall_ms=0.0, train_loss=float("nan")):
    """Build an :class:`EpochRecord` from flattened outputs and their targets."""
    from . import quantum, realrep

    loss = loss_mse(outputs, targets)
    if not np.isfinite(loss):
        raise Diverged(f"non-finite loss at index {index}")
    m = quantum.quantum_metrics(realrep.unflatten(outputs))
    return EpochRecord(
        index=index,
        loss=loss,
        trace_residual_max=float(np.max(m.trace_residual)),
        trace_residual_mean=float(np.mean(m.trace_residual)),
        antiherm_max=float(np.max(m.antiherm_norm)),
        antiherm_mean=float(np.mean(m.antiherm_norm)),
        min_eig=float(np.min(m.min_eigenvalue)),
        wall_ms=wall_ms,
        train_loss=train_loss,
    )


def evaluate(net: Network, inputs, targets, index=0, wall_ms=0.0, train_loss=float("nan")):
    """Held-out loss and constraint metrics of ``net`` on a probe set."""
    return evaluate_outputs(forward(net, inputs), targets, index, wall_ms, train_loss)


def train(net: Network, dataset, config: TrainConfig, progress=None):
    """Train ``net`` in place on ``dataset`` and return ``(net, records)``.

    ``dataset`` provides ``train_x``, ``train_y``, ``heldout_x``, ``heldout_y``
    as ``(N, 64)`` arrays. The training order is reshuffled every epoch from a
    generator seeded with ``config.seed``. A record for epoch 0 (the untrained
    state) is always included.
    """
    import time

    x, y = dataset.train_x, dataset.train_y
    hx, hy = dataset.heldout_x, dataset.heldout_y
    if len(x) == 0:
        raise ValueError("empty training set")
    rng = np.random.default_rng(config.seed)
    params = net.params()
    opt = config.make_optimizer(params)
    wanted = None if config.record_epochs is None else set(int(e) for e in config.record_epochs)
    start = time.perf_counter()

    def stamp():
        return (time.perf_counter() - start) * 1e3 if config.wall_time else 0.0

    records = [evaluate(net, hx, hy, 0, stamp())]
    for epoch, batch in enumerate(config.batch_sizes(), start=1):
        order = rng.permutation(len(x))
        total = 0.0
        for lo in range(0, len(x), batch):
            idx = order[lo:lo + batch]
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads = backward(net, x[idx], y[idx])
            if not math.isfinite(loss):
                raise Diverged(f"non-finite training loss in epoch {epoch}")
            opt.step(params, grads)
            total += loss * len(idx)
        if wanted is None or epoch in wanted or epoch == config.epochs:
            rec = evaluate(net, hx, hy, epoch, stamp(), total / len(x))
            records.append(rec)
            if progress is not None:
                progress(rec)
    return net, records


# -- persistence ------------------------------------------------------------

def _fmt(values):
    return " ".join(f"{v:.16e}" for v in np.asarray(values, dtype=np.float64).ravel())


def save_network(net: Network, path, config=None):
    """Write a network as text; floats carry 17 significant digits (exact round trip)."""
    lines = [
        f"format {FORMAT_NAME} {FORMAT_VERSION}",
        "config " + json.dumps(config if config is not None else {}, sort_keys=True),
        f"layers {len(net.layers)}",
    ]
    for i, layer in enumerate(net.layers):
        n_out, n_in = layer.weights.shape
        lines.append(f"layer {i} in {n_in} out {n_out} activation {layer.activation}")
        lines.append("weights " + _fmt(layer.weights))
        lines.append("bias " + _fmt(layer.bias))
    Path(path).write_text("\n".join(lines) + "\n")


def load_network(path, with_config=False):
    """Inverse of :func:`save_network`."""
    path = Path(path)
    if not path.is_file():
        raise MissingWeights(f"no weight file at {path}")
    try:
        lines = path.read_text().splitlines()
        head = lines[0].split()
        if head[:2] != ["format", FORMAT_NAME] or int(head[2]) != FORMAT_VERSION:
            raise CorruptWeights(f"{path}: unrecognised header {lines[0]!r}")
        if not lines[1].startswith("config "):
            raise CorruptWeights(f"{path}: missing config line")
        config = json.loads(lines[1][len("config "):])
        count = int(lines[2].split()[1])
        layers = []
        for i in range(count):
            desc = lines[3 + 3 * i].split()
            n_in, n_out, act = int(desc[3]), int(desc[5]), desc[7]
            w = np.array([float(v) for v in lines[4 + 3 * i].split()[1:]])
            b = np.array([float(v) for v in lines[5 + 3 * i].split()[1:]])
            if w.size != n_in * n_out or b.size != n_out or act not in ACTIVATIONS:
                raise CorruptWeights(f"{path}: layer {i} does not match its declared shape")
            layers.append(Layer(w.reshape(n_out, n_in), b, act))
        net = Network(layers)
        _check_shape(net.dims, net.activations)
    except CorruptWeights:
        raise
    except (IndexError, ValueError, json.JSONDecodeError, BadShape) as exc:
        raise CorruptWeights(f"{path}: {exc}") from exc
    return (net, config) if with_config else net
