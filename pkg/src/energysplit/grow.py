"""Energy-aware growth: alternate training to a plateau with budgeted splitting."""
from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset
from .energy import costed, select_fractional, select_vanilla
from .net import (Network, TrainHyper, apply_split, evaluate, flops, params,
                  save_checkpoint, train_to_plateau)
from .rayleigh import RayleighConfig, rayleigh_descent
from .splitmat import exact_indexes

INDEX_METHODS = ("exact", "rayleigh")


@dataclass
class GrowthConfig:
    epsilon: float | None = None  # None: epsilon_scale * mean hidden-neuron norm, per stage
    epsilon_scale: float = 0.01
    growth_ratio: float = 0.5
    max_stages: int = 10
    flops_target: int | None = None
    index_method: str = "exact"
    lambda_stop: float = 1e-4
    vanilla: bool = False
    rayleigh: RayleighConfig = field(default_factory=RayleighConfig)
    train: TrainHyper = field(default_factory=TrainHyper)
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.growth_ratio <= 1:
            raise ValueError("growth_ratio must lie in (0, 1]")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.epsilon_scale > 0:
            raise ValueError("epsilon_scale must be positive")
        if self.lambda_stop < 0:
            raise ValueError("lambda_stop must be non-negative")
        if self.max_stages < 1:
            raise ValueError("max_stages must be >= 1")
        if self.index_method not in INDEX_METHODS:
            raise ValueError(f"index_method must be one of {INDEX_METHODS}")


@dataclass
class StageRecord:
    stage: int
    loss_before: float
    loss_after: float
    accuracy_before: float
    accuracy_after: float
    test_accuracy_before: float
    flops_before: int
    flops_after: int
    budget: int
    epsilon: float
    train_epochs: int
    selected: list = field(default_factory=list)  # dicts: layer, index, lambda_min, cost
    predicted_gain: float = 0.0  # eps^2 / 2 * sum(lambda_min)
    realized_gain: float = 0.0  # loss_after - loss_before, before retraining

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)


@dataclass
class TradeoffPoint:
    stage: int
    flops: int
    params: int
    train_loss: float
    test_accuracy: float


@dataclass
class Terminated:
    reason: str
    net: Network
    point: TradeoffPoint | None = None  # set when the stage trained before stopping


@dataclass
class GrowthResult:
    records: list[StageRecord]
    net: Network
    points: list[TradeoffPoint]
    reason: str


def _stage_seed(seed: int, stage: int, salt: int) -> int:
    return int(np.random.SeedSequence([seed, stage, salt]).generate_state(1)[0])


def default_epsilon(net: Network, scale: float = 0.01) -> float:
    norms = [np.linalg.norm(net.theta(ref)) for ref in net.hidden_refs()]
    return scale * float(np.mean(norms))


def flops_after_splits(net: Network, refs) -> int:
    """Exact flops once every neuron in ``refs`` has been split."""
    sizes = net.sizes
    for ref in refs:
        sizes[ref.layer + 1] += 1
    return sum((a + 1) * b for a, b in zip(sizes[:-1], sizes[1:]))


def split_all(net: Network, splits, eps: float) -> Network:
    """Apply several splits computed on the same topology.

    Deeper layers go first: their directions were sized for the current
    fan-in, which a shallower split would widen.
    """
    for ref, v in sorted(splits, key=lambda s: (-s[0].layer, s[0].index)):
        net = apply_split(net, ref, v, eps)
    return net


def compute_indexes(net: Network, data: Dataset, cfg: GrowthConfig, stage: int = 1):
    if cfg.index_method == "exact":
        return exact_indexes(net, data)
    rcfg = dataclasses.replace(cfg.rayleigh, seed=_stage_seed(cfg.seed, stage, 2))
    return rayleigh_descent(net, data, rcfg)


def _point(stage, net, data, train_loss=None) -> TradeoffPoint:
    if train_loss is None:
        train_loss, _ = evaluate(net, data.x_train, data.y_train)
    _, test_acc = evaluate(net, data.x_test, data.y_test)
    return TradeoffPoint(stage, flops(net), params(net), train_loss, test_acc)


def grow_stage(net: Network, data: Dataset, cfg: GrowthConfig, stage: int = 1):
    """One growth round: train to a plateau, index every neuron, select, split.

    Returns ``(new_net, StageRecord)`` or a ``Terminated`` marker.
    """
    out, _ = _stage(net, data, cfg, stage)
    return out


def _stage(net, data, cfg, stage):
    if cfg.flops_target is not None and flops(net) >= cfg.flops_target:
        return Terminated("budget reached", net), None

    hyper = dataclasses.replace(cfg.train, seed=_stage_seed(cfg.seed, stage, 1))
    net, history = train_to_plateau(net, data, hyper)
    loss_before, acc_before = evaluate(net, data.x_train, data.y_train)
    point = _point(stage - 1, net, data, loss_before)

    indexes = compute_indexes(net, data, cfg, stage)
    candidates = [it for it in costed(net, indexes.values()) if it.lambda_min < -cfg.lambda_stop]
    if not candidates:
        return Terminated("no descent direction", net, point), point

    f0 = flops(net)
    budget = math.floor(cfg.growth_ratio * f0)
    if cfg.vanilla:
        cap = max(1, math.ceil(cfg.growth_ratio * len(net.hidden_refs())))
        chosen = select_vanilla(candidates, cap).chosen
    else:
        chosen = select_fractional(candidates, budget).chosen
        # adjacent-layer splits cost slightly more than their summed estimates
        while chosen and flops_after_splits(net, chosen) > f0 + budget:
            chosen = chosen[:-1]
    if not chosen:
        return Terminated("no affordable split", net, point), point

    eps = cfg.epsilon if cfg.epsilon is not None else default_epsilon(net, cfg.epsilon_scale)
    grown = split_all(net, [(ref, indexes[ref].v_min) for ref in chosen], eps)
    loss_after, acc_after = evaluate(grown, data.x_train, data.y_train)
    by_ref = {it.neuron: it for it in candidates}
    lam_sum = sum(by_ref[ref].lambda_min for ref in chosen)
    record = StageRecord(
        stage=stage,
        loss_before=loss_before,
        loss_after=loss_after,
        accuracy_before=acc_before,
        accuracy_after=acc_after,
        test_accuracy_before=point.test_accuracy,
        flops_before=f0,
        flops_after=flops(grown),
        budget=budget,
        epsilon=eps,
        train_epochs=len(history),
        selected=[{"layer": ref.layer, "index": ref.index,
                   "lambda_min": by_ref[ref].lambda_min, "cost": by_ref[ref].cost} for ref in chosen],
        predicted_gain=0.5 * eps * eps * lam_sum,
        realized_gain=loss_after - loss_before,
    )
    return (grown, record), point


def write_tradeoff(points, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "flops", "params", "train_loss", "test_accuracy"])
        for p in points:
            writer.writerow([p.stage, p.flops, p.params, repr(p.train_loss), repr(p.test_accuracy)])


def run(net0: Network, data: Dataset, cfg: GrowthConfig, out_dir=None) -> GrowthResult:
    """Grow ``net0`` until no split helps, the flops target or ``max_stages``.

    The returned network is always trained. With ``out_dir`` set, stage
    records are appended to ``stages.jsonl`` as they happen, and
    ``checkpoint.json`` and ``tradeoff.csv`` are written at the end.
    """
    log = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        log = open(out_dir / "stages.jsonl", "w")
    records: list[StageRecord] = []
    points: list[TradeoffPoint] = []
    net = net0
    reason = "max stages"
    try:
        for stage in range(1, cfg.max_stages + 1):
            out, point = _stage(net, data, cfg, stage)
            if point is not None:
                points.append(point)
            if isinstance(out, Terminated):
                net, reason = out.net, out.reason
                break
            net, record = out
            records.append(record)
            if log is not None:
                log.write(record.to_json() + "\n")
                log.flush()
        if len(points) == len(records):
            hyper = dataclasses.replace(cfg.train, seed=_stage_seed(cfg.seed, len(records) + 1, 1))
            net, _ = train_to_plateau(net, data, hyper)
            points.append(_point(len(records), net, data))
    finally:
        if log is not None:
            log.close()
    if out_dir is not None:
        save_checkpoint(net, out_dir / "checkpoint.json")
        write_tradeoff(points, out_dir / "tradeoff.csv")
    return GrowthResult(records, net, points, reason)
