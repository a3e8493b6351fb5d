"""Split costs and budgeted selection of neurons to split.

Choosing the split set is a 0/1 knapsack: minimize the summed splitting
indexes subject to a flops budget. The production path solves the LP
relaxation with the fractional greedy and keeps items with beta > 0.9;
``select_exact`` is a dynamic program kept as a test oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .net import Network, NeuronRef

THRESHOLD = 0.9
MAX_TABLE_CELLS = 10**7


@dataclass(frozen=True)
class CostedIndex:
    neuron: NeuronRef
    lambda_min: float
    cost: int

    def __post_init__(self):
        if int(self.cost) != self.cost or self.cost < 1:
            raise ValueError(f"cost must be a positive integer, got {self.cost}")


@dataclass
class SelectionResult:
    beta: dict = field(default_factory=dict)
    chosen: list = field(default_factory=list)
    objective: float = 0.0
    spent: int = 0


def split_cost(net: Network, ref: NeuronRef) -> int:
    """Flops added by splitting ``ref`` in the current topology: its own
    parameter vector plus one new weight per unit in the next layer."""
    net.check_ref(ref)
    fan_in = net.weights[ref.layer].shape[1] - 1
    fan_out = net.weights[ref.layer + 1].shape[0]
    return fan_in + 1 + fan_out


def costed(net: Network, indexes) -> list[CostedIndex]:
    return [CostedIndex(ix.neuron, float(ix.lambda_min), split_cost(net, ix.neuron)) for ix in indexes]


def _order(items):
    # most negative gain per flop first; ties by (layer, index)
    return sorted(items, key=lambda it: (it.lambda_min / it.cost, it.neuron))


def select_fractional(items, budget: int) -> SelectionResult:
    """Exact LP-relaxation solution by the fractional-knapsack greedy, thresholded.

    Items with non-negative index are never selected. The one possibly
    fractional item joins the split set only if ``beta > 0.9`` and its
    whole cost still fits, so the set never exceeds the budget.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    result = SelectionResult(beta={it.neuron: 0.0 for it in items})
    remaining = int(budget)
    for it in _order([it for it in items if it.lambda_min < 0]):
        if remaining <= 0:
            break
        fits = it.cost <= remaining
        beta = 1.0 if fits else remaining / it.cost
        result.beta[it.neuron] = beta
        result.objective += beta * it.lambda_min
        if beta > THRESHOLD and fits:
            result.chosen.append(it.neuron)
            result.spent += it.cost
        remaining = remaining - it.cost if fits else 0
    return result


def select_exact(items, budget: int) -> SelectionResult:
    """Optimal 0/1 selection by dynamic programming over spent cost."""
    if budget < 0:
        raise ValueError("budget must be non-negative")
    neg = [it for it in _order(items) if it.lambda_min < 0]
    cap = min(int(budget), sum(it.cost for it in neg))
    cells = (len(neg) + 1) * (cap + 1)
    if cells > MAX_TABLE_CELLS:
        raise ValueError(f"knapsack table of {cells} cells exceeds the {MAX_TABLE_CELLS} limit")

    # best[k][c]: minimal objective using the first k items with total cost <= c
    best = np.zeros((len(neg) + 1, cap + 1))
    for k, it in enumerate(neg, start=1):
        best[k] = best[k - 1]
        if it.cost <= cap:
            take = best[k - 1, : cap + 1 - it.cost] + it.lambda_min
            best[k, it.cost:] = np.minimum(best[k, it.cost:], take)

    chosen, c = [], cap
    for k in range(len(neg), 0, -1):
        if best[k, c] != best[k - 1, c]:
            chosen.append(neg[k - 1])
            c -= neg[k - 1].cost
    chosen.reverse()

    result = SelectionResult(beta={it.neuron: 0.0 for it in items})
    for it in chosen:
        result.beta[it.neuron] = 1.0
        result.chosen.append(it.neuron)
        result.objective += it.lambda_min
        result.spent += it.cost
    return result


def select_vanilla(items, max_count: int) -> SelectionResult:
    """Energy-unaware selection: the ``max_count`` most negative indexes."""
    result = SelectionResult(beta={it.neuron: 0.0 for it in items})
    ranked = sorted((it for it in items if it.lambda_min < 0), key=lambda it: (it.lambda_min, it.neuron))
    for it in ranked[:max_count]:
        result.beta[it.neuron] = 1.0
        result.chosen.append(it.neuron)
        result.objective += it.lambda_min
        result.spent += it.cost
    return result
