"""Matrix-free splitting indexes by stochastic descent on the Rayleigh quotient.

Each hidden neuron keeps a unit vector ``v``. One mini-batch capture pass
gives ``g = S_B v`` for every neuron at once; ``v`` then moves against
``g - R(v) v`` (the Rayleigh gradient up to a positive factor) with an
RMSprop step and is projected back to the unit sphere. The reported index
is the full-data quotient at the final ``v``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .linalg import canonical_sign
from .net import Network, NeuronRef
from .splitmat import NeuronCurvature, SplitIndex, curvatures

MAX_RESTARTS = 3


@dataclass
class RayleighConfig:
    batch_size: int = 64
    learning_rate: float = 1e-3
    epochs: int = 10
    adaptive_decay: float = 0.9
    epsilon_guard: float = 1e-8
    seed: int = 0
    adaptive: bool = True  # False: plain gradient steps

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


def quotient(curv: NeuronCurvature, v) -> float:
    v = np.asarray(v, dtype=np.float64)
    vv = float(v @ v)
    if vv == 0.0:
        raise ValueError("Rayleigh quotient of the zero vector is undefined")
    return float(v @ curv.matvec(v)) / vv


def rayleigh_quotient(net: Network, data: Dataset, ref: NeuronRef, v) -> float:
    """``v^T S v / v^T v`` for one neuron over the full training split."""
    if not np.any(np.asarray(v)):
        raise ValueError("Rayleigh quotient of the zero vector is undefined")
    curv = curvatures(net, data.x_train, data.y_train, [ref])[ref]
    return quotient(curv, v)


def _random_unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def _descend(batch_curvatures, full_curvatures, n, dims, cfg: RayleighConfig,
             trace=None, callback=None):
    rng = np.random.default_rng(cfg.seed)
    vs = {ref: _random_unit(rng, d) for ref, d in dims.items()}
    acc = {ref: np.zeros(d) for ref, d in dims.items()}
    restarts = dict.fromkeys(dims, 0)

    def record():
        caps = full_curvatures()
        for ref in dims:
            trace.setdefault(ref, []).append(quotient(caps[ref], vs[ref]))

    if trace is not None:
        record()
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            caps = batch_curvatures(order[start:start + cfg.batch_size])
            for ref, v in vs.items():
                g = caps[ref].matvec(v)
                grad = g - (v @ g) / (v @ v) * v
                if cfg.adaptive:
                    acc[ref] = cfg.adaptive_decay * acc[ref] + (1.0 - cfg.adaptive_decay) * grad * grad
                    step = cfg.learning_rate * grad / (np.sqrt(acc[ref]) + cfg.epsilon_guard)
                else:
                    step = cfg.learning_rate * grad
                new = v - step
                norm = np.linalg.norm(new)
                if not (np.all(np.isfinite(new)) and np.isfinite(norm) and norm > 0):
                    restarts[ref] += 1
                    if restarts[ref] > MAX_RESTARTS:
                        raise RuntimeError(f"Rayleigh descent for neuron {ref} diverged "
                                           f"after {MAX_RESTARTS} restarts")
                    new, norm = _random_unit(rng, dims[ref]), 1.0
                    acc[ref] = np.zeros(dims[ref])
                vs[ref] = new / norm
            if callback is not None:
                callback(vs)
        if trace is not None:
            record()

    caps = full_curvatures()
    return {ref: SplitIndex(ref, quotient(caps[ref], v), canonical_sign(v), "rayleigh")
            for ref, v in vs.items()}


def rayleigh_descent(net: Network, data: Dataset, cfg: RayleighConfig | None = None,
                     refs=None, trace=None, callback=None) -> dict[NeuronRef, SplitIndex]:
    """Estimate the splitting index of every hidden neuron (or of ``refs``).

    If ``trace`` is a dict it receives, per neuron, the full-data quotient
    at the start and after each epoch.
    """
    cfg = cfg or RayleighConfig()
    x, y = data.x_train, data.y_train
    if len(x) == 0:
        raise ValueError("empty dataset")
    refs = net.hidden_refs() if refs is None else list(refs)
    dims = {ref: net.weights[ref.layer].shape[1] for ref in refs}
    return _descend(
        lambda idx: curvatures(net, x[idx], y[idx], refs),
        lambda: curvatures(net, x, y, refs),
        len(x), dims, cfg, trace, callback,
    )


def descend_curvatures(curvs: dict, cfg: RayleighConfig | None = None,
                       trace=None, callback=None) -> dict:
    """Same descent on precomputed (possibly hand-built) curvature captures."""
    cfg = cfg or RayleighConfig()
    n = {len(c) for c in curvs.values()}
    if len(n) != 1:
        raise ValueError("all captures must cover the same examples")
    dims = {ref: c.dim for ref, c in curvs.items()}
    return _descend(
        lambda idx: {ref: c.subset(idx) for ref, c in curvs.items()},
        lambda: curvs,
        n.pop(), dims, cfg, trace, callback,
    )
