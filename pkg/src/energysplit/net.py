"""Dense feed-forward networks with per-neuron parameter vectors.

Every layer is a matrix of shape ``(n_out, fan_in + 1)`` whose rows are the
neurons' parameter vectors, bias last. Hidden layers use one smooth
activation; the last layer is linear and feeds the loss head.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .data import Dataset

LOSS_HEADS = ("softmax_ce", "mse")


# --------------------------------------------------------------------------
# activations


@dataclass(frozen=True)
class Activation:
    kind: str

    def __post_init__(self):
        if self.kind not in _ACT:
            raise ValueError(f"unsupported activation {self.kind!r}; smooth options are {sorted(_ACT)}")

    def h(self, z):
        return _ACT[self.kind][0](z)

    def dh(self, z):
        return _ACT[self.kind][1](z)

    def d2h(self, z):
        return _ACT[self.kind][2](z)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _tanh_d1(z):
    t = np.tanh(z)
    return 1.0 - t * t


def _tanh_d2(z):
    t = np.tanh(z)
    return -2.0 * t * (1.0 - t * t)


def _sigmoid_d1(z):
    s = _sigmoid(z)
    return s * (1.0 - s)


def _sigmoid_d2(z):
    s = _sigmoid(z)
    return s * (1.0 - s) * (1.0 - 2.0 * s)


def _softplus(z):
    return np.logaddexp(0.0, z)


_ACT = {
    "tanh": (np.tanh, _tanh_d1, _tanh_d2),
    "sigmoid": (_sigmoid, _sigmoid_d1, _sigmoid_d2),
    "softplus": (_softplus, _sigmoid, _sigmoid_d1),
}


# --------------------------------------------------------------------------
# network


class NeuronRef(NamedTuple):
    layer: int
    index: int

    def __str__(self):
        return f"{self.layer}:{self.index}"


@dataclass
class Network:
    weights: list[np.ndarray]
    activation: str = "tanh"
    loss_head: str = "softmax_ce"

    def __post_init__(self):
        self.act = Activation(self.activation)
        if self.loss_head not in LOSS_HEADS:
            raise ValueError(f"unknown loss head {self.loss_head!r}")
        self.weights = [np.array(w, dtype=np.float64) for w in self.weights]
        if not self.weights:
            raise ValueError("network needs at least an output layer")
        for k, w in enumerate(self.weights):
            if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
                raise ValueError(f"layer {k} has bad shape {w.shape}")
            if k and w.shape[1] != self.weights[k - 1].shape[0] + 1:
                raise ValueError(
                    f"layer {k} expects fan_in {w.shape[1] - 1} but layer {k - 1} "
                    f"has {self.weights[k - 1].shape[0]} neurons")
            if not np.all(np.isfinite(w)):
                raise ValueError(f"non-finite parameters in layer {k}")

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[1] - 1

    @property
    def n_outputs(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def hidden_sizes(self) -> list[int]:
        return [w.shape[0] for w in self.weights[:-1]]

    @property
    def sizes(self) -> list[int]:
        return [self.n_inputs, *self.hidden_sizes, self.n_outputs]

    def hidden_refs(self) -> list[NeuronRef]:
        return [NeuronRef(k, i) for k, n in enumerate(self.hidden_sizes) for i in range(n)]

    def theta(self, ref: NeuronRef) -> np.ndarray:
        self.check_ref(ref)
        return self.weights[ref.layer][ref.index]

    def check_ref(self, ref: NeuronRef) -> None:
        layer, index = ref
        if not 0 <= layer < len(self.weights):
            raise IndexError(f"no layer {layer}")
        if layer == len(self.weights) - 1:
            raise ValueError(f"{ref} is an output unit; only hidden neurons can be split")
        if not 0 <= index < self.weights[layer].shape[0]:
            raise IndexError(f"layer {layer} has no neuron {index}")

    def copy(self) -> "Network":
        return copy.deepcopy(self)


def init_network(sizes, activation="tanh", loss_head="softmax_ce", seed=0) -> Network:
    """Random network with layer widths ``sizes = [n_in, *hidden, n_out]``.

    Each parameter is drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    """
    if len(sizes) < 2 or min(sizes) < 1:
        raise ValueError(f"bad layer sizes {sizes}")
    rng = np.random.default_rng(seed)
    weights = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in + 1)))
    return Network(weights, activation, loss_head)


def _with_bias(a: np.ndarray) -> np.ndarray:
    return np.hstack([a, np.ones((a.shape[0], 1))])


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]  # x̃ per layer, bias column included
    pre: list[np.ndarray]  # z per hidden layer


def forward(net: Network, x, extra=None):
    """Network outputs for one input vector or a batch of rows.

    ``extra`` optionally maps a hidden ``NeuronRef`` to per-example values
    added to that neuron's output before it feeds the next layer.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    a = np.atleast_2d(x)
    if a.shape[1] != net.n_inputs:
        raise ValueError(f"input has {a.shape[1]} features, network expects {net.n_inputs}")
    cache = ForwardCache([], [])
    for k, w in enumerate(net.weights):
        xt = _with_bias(a)
        cache.inputs.append(xt)
        z = xt @ w.T
        if k == len(net.weights) - 1:
            a = z
            break
        cache.pre.append(z)
        a = net.act.h(z)
        if extra:
            for ref, val in extra.items():
                if ref.layer == k:
                    a[:, ref.index] = a[:, ref.index] + val
        if not np.all(np.isfinite(a)):
            raise FloatingPointError(f"non-finite activation in hidden layer {k}")
    if not np.all(np.isfinite(a)):
        raise FloatingPointError("non-finite network output")
    return (a[0] if single else a), cache


def _head(net: Network, out: np.ndarray, y: np.ndarray):
    """Per-example loss and its gradient w.r.t. the outputs."""
    if net.loss_head == "softmax_ce":
        y = np.asarray(y, dtype=np.int64)
        if y.size and (y.min() < 0 or y.max() >= net.n_outputs):
            raise ValueError(f"label out of range for {net.n_outputs} classes")
        shifted = out - out.max(axis=1, keepdims=True)
        logz = np.log(np.exp(shifted).sum(axis=1))
        rows = np.arange(len(y))
        per = logz - shifted[rows, y]
        grad = np.exp(shifted - logz[:, None])
        grad[rows, y] -= 1.0
        return per, grad
    y = np.asarray(y, dtype=np.float64).reshape(out.shape)
    diff = out - y
    return np.sum(diff * diff, axis=1), 2.0 * diff


def loss(net: Network, x, y, extra=None) -> float:
    out, _ = forward(net, np.atleast_2d(x), extra)
    per, _ = _head(net, out, y)
    return float(per.mean())


@dataclass
class Captures:
    """Per-example quantities for every hidden neuron from one forward/backward pass.

    For hidden layer ``k``: ``inputs[k]`` is x̃ (N, fan_in+1), ``pre[k]`` the
    pre-activations z (N, n_k) and ``out_grad[k]`` the gradient of each
    example's own loss w.r.t. the neuron outputs (N, n_k).
    """

    inputs: list[np.ndarray]
    pre: list[np.ndarray]
    out_grad: list[np.ndarray]

    def neuron(self, ref: NeuronRef):
        k, i = ref
        return self.inputs[k], self.pre[k][:, i], self.out_grad[k][:, i]


def loss_and_grads(net: Network, x, y):
    """Batch-mean loss, its exact gradients (one array per layer) and captures."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if len(x) == 0:
        raise ValueError("empty batch")
    out, cache = forward(net, x)
    per, delta = _head(net, out, y)
    n = len(x)
    grads = [None] * len(net.weights)
    out_grads = [None] * (len(net.weights) - 1)
    for k in range(len(net.weights) - 1, -1, -1):
        grads[k] = delta.T @ cache.inputs[k] / n
        if k == 0:
            break
        g = delta @ net.weights[k][:, :-1]
        out_grads[k - 1] = g
        delta = g * net.act.dh(cache.pre[k - 1])
    return float(per.mean()), grads, Captures(cache.inputs[:-1], cache.pre, out_grads)


def predict(net: Network, x) -> np.ndarray:
    out, _ = forward(net, np.atleast_2d(x))
    return out.argmax(axis=1)


def evaluate(net: Network, x, y) -> tuple[float, float]:
    """(mean loss, accuracy); accuracy is NaN for regression heads or empty sets."""
    if len(x) == 0:
        return float("nan"), float("nan")
    value = loss(net, x, y)
    if net.loss_head != "softmax_ce":
        return value, float("nan")
    return value, float(np.mean(predict(net, x) == np.asarray(y)))


# --------------------------------------------------------------------------
# cost model


def flops(net: Network) -> int:
    """Multiply-accumulates for one forward pass; each weight and bias counts once."""
    return int(sum(w.size for w in net.weights))


def params(net: Network) -> int:
    return int(sum(w.size for w in net.weights))


def apply_split(net: Network, ref: NeuronRef, v, eps: float) -> Network:
    """Replace a hidden neuron by two off-springs ``theta ± eps * v``.

    The first off-spring keeps the neuron's slot and the second is appended
    to the end of its layer, so references to other neurons stay valid. Each
    off-spring gets half of the original outgoing weights.
    """
    net.check_ref(ref)
    k, i = ref
    theta = net.weights[k][i]
    v = np.asarray(v, dtype=np.float64)
    if v.shape != theta.shape:
        raise ValueError(f"direction has shape {v.shape}, neuron has {theta.shape}")
    if abs(np.linalg.norm(v) - 1.0) > 1e-8:
        raise ValueError("split direction must be a unit vector")
    if eps < 0:
        raise ValueError("eps must be non-negative")

    new = net.copy()
    layer = new.weights[k]
    layer[i] = theta + eps * v
    new.weights[k] = np.vstack([layer, theta - eps * v])
    nxt = new.weights[k + 1]
    half = nxt[:, i] / 2.0
    nxt[:, i] = half
    new.weights[k + 1] = np.hstack([nxt[:, :-1], half[:, None], nxt[:, -1:]])
    return new


# --------------------------------------------------------------------------
# parametric training


@dataclass
class TrainHyper:
    learning_rate: float = 0.1
    momentum: float = 0.9
    batch_size: int = 32
    max_epochs: int = 400
    patience: int = 10
    rel_improve_tol: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")


class DivergenceError(RuntimeError):
    def __init__(self, msg, history):
        super().__init__(msg)
        self.history = history


def train_to_plateau(net: Network, data: Dataset, hyper: TrainHyper):
    """Momentum SGD on shuffled mini-batches until the loss stops improving.

    After every epoch the full training loss is evaluated. Training stops
    after ``max_epochs`` or once the best loss has not improved by a relative
    ``rel_improve_tol`` for ``patience`` epochs in a row. The best snapshot
    seen, the starting point included, is returned together with the
    ``(epoch, loss)`` history.
    """
    x, y = data.x_train, data.y_train
    if len(x) == 0:
        raise ValueError("empty training set")
    work = net.copy()
    history: list[tuple[int, float]] = []
    if hyper.max_epochs == 0:
        return work, history
    rng = np.random.default_rng(hyper.seed)
    velocity = [np.zeros_like(w) for w in work.weights]
    best = loss(work, x, y)
    best_weights = [w.copy() for w in work.weights]
    reference = best
    stall = 0
    for epoch in range(1, hyper.max_epochs + 1):
        order = rng.permutation(len(x))
        try:
            # overflow surfaces as a non-finite loss below
            with np.errstate(over="ignore", invalid="ignore"):
                for start in range(0, len(x), hyper.batch_size):
                    idx = order[start:start + hyper.batch_size]
                    _, grads, _ = loss_and_grads(work, x[idx], y[idx])
                    for w, vel, g in zip(work.weights, velocity, grads):
                        vel *= hyper.momentum
                        vel -= hyper.learning_rate * g
                        w += vel
                current = loss(work, x, y)
        except FloatingPointError as exc:
            raise DivergenceError(f"training diverged in epoch {epoch}: {exc}", history) from exc
        if not np.isfinite(current):
            raise DivergenceError(f"training loss became {current} in epoch {epoch}", history)
        history.append((epoch, current))
        if current < best:
            best = current
            best_weights = [w.copy() for w in work.weights]
        if current < reference * (1.0 - hyper.rel_improve_tol):
            reference = current
            stall = 0
        else:
            stall += 1
            if stall >= hyper.patience:
                break
    work.weights = best_weights
    return work, history


# --------------------------------------------------------------------------
# checkpoints


def to_dict(net: Network) -> dict:
    return {
        "layers": [w.tolist() for w in net.weights],
        "activation": net.activation,
        "loss_head": net.loss_head,
        "flops": flops(net),
    }


def from_dict(obj: dict) -> Network:
    missing = {"layers", "activation", "loss_head"} - set(obj)
    if missing:
        raise ValueError(f"checkpoint is missing {sorted(missing)}")
    net = Network([np.array(w, dtype=np.float64) for w in obj["layers"]],
                  obj["activation"], obj["loss_head"])
    if "flops" in obj and obj["flops"] != flops(net):
        raise ValueError(f"checkpoint flops {obj['flops']} disagree with its layers ({flops(net)})")
    return net


def save_checkpoint(net: Network, path) -> None:
    # json writes floats with repr(), the shortest string that round-trips exactly
    Path(path).write_text(json.dumps(to_dict(net)) + "\n")


def load_checkpoint(path) -> Network:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not a JSON checkpoint ({exc})") from None
    return from_dict(obj)
