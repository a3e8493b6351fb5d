import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from energysplit.energy import (MAX_TABLE_CELLS, CostedIndex, costed, select_exact,
                                select_fractional, select_vanilla, split_cost)
from energysplit.net import NeuronRef, apply_split, flops, init_network
from energysplit.splitmat import SplitIndex

from conftest import random_net


def items_from(pairs):
    return [CostedIndex(NeuronRef(0, i), float(lam), int(e)) for i, (lam, e) in enumerate(pairs)]


def brute_force(items, budget):
    best, best_set = 0.0, ()
    for r in range(1, len(items) + 1):
        for subset in itertools.combinations(items, r):
            if sum(it.cost for it in subset) <= budget:
                value = sum(it.lambda_min for it in subset)
                if value < best:
                    best, best_set = value, subset
    return best, best_set


instances = st.lists(
    st.tuples(st.floats(-5, 2, allow_nan=False).map(lambda v: round(v, 3)), st.integers(1, 20)),
    min_size=0, max_size=15,
).flatmap(lambda pairs: st.tuples(st.just(pairs), st.integers(0, max(1, sum(e for _, e in pairs)))))


# ---- split costs -----------------------------------------------------------

def test_split_cost_example():
    net = init_network([2, 4, 3])
    assert split_cost(net, NeuronRef(0, 0)) == 3 + 3


def test_split_cost_output_unit_rejected():
    with pytest.raises(ValueError, match="output unit"):
        split_cost(init_network([2, 2, 2]), NeuronRef(1, 0))


def test_costs_re_evaluated_after_layer_growth():
    net = init_network([2, 3, 3, 2])
    before = split_cost(net, NeuronRef(0, 0))
    grown = apply_split(net, NeuronRef(1, 0), np.array([1.0, 0, 0, 0]), 0.1)
    # the upstream neuron now feeds one more unit; the layer-mate's fan_in is unchanged
    assert split_cost(grown, NeuronRef(0, 0)) == before + 1
    assert split_cost(grown, NeuronRef(1, 1)) == split_cost(net, NeuronRef(1, 1))


def test_split_cost_equals_realized_delta(rng):
    for _ in range(50):
        net = random_net(rng)
        ref = net.hidden_refs()[int(rng.integers(len(net.hidden_refs())))]
        v = rng.normal(size=net.theta(ref).size)
        grown = apply_split(net, ref, v / np.linalg.norm(v), 0.05)
        assert split_cost(net, ref) == flops(grown) - flops(net)


def test_costed_wraps_indexes():
    net = init_network([2, 3, 2])
    ix = [SplitIndex(NeuronRef(0, 1), -0.5, np.ones(3))]
    assert costed(net, ix) == [CostedIndex(NeuronRef(0, 1), -0.5, 5)]


@pytest.mark.parametrize("cost", [0, -1, 1.5])
def test_cost_must_be_positive_integer(cost):
    with pytest.raises(ValueError):
        CostedIndex(NeuronRef(0, 0), -1.0, cost)


# ---- fractional greedy -----------------------------------------------------

def test_fractional_all_non_negative():
    res = select_fractional(items_from([(0.0, 1), (2.0, 3)]), 10)
    assert res.chosen == [] and res.objective == 0.0 and res.spent == 0


def test_fractional_everything_fits():
    items = items_from([(-1.0, 2), (0.5, 1), (-2.0, 4)])
    res = select_fractional(items, 6)
    assert set(res.chosen) == {items[0].neuron, items[2].neuron}
    assert res.objective == -3.0


def test_fractional_three_item_example():
    items = items_from([(-4, 2), (-3, 1), (-1, 2)])
    res = select_fractional(items, 3)
    assert res.chosen == [items[1].neuron, items[0].neuron]
    assert res.objective == -7.0
    assert res.beta[items[2].neuron] == 0.0
    best, subset = brute_force(items, 3)
    assert best == -7.0 and {it.neuron for it in subset} == set(res.chosen)


def test_fractional_zero_budget():
    res = select_fractional(items_from([(-1.0, 1)]), 0)
    assert res.chosen == [] and res.spent == 0


def test_fractional_item_above_threshold_kept_only_if_it_fits():
    # 19 of 20 units left for the second item: beta = 0.95 but it does not fit
    items = items_from([(-10.0, 1), (-1.0, 20)])
    res = select_fractional(items, 20)
    assert res.beta[items[1].neuron] == pytest.approx(0.95)
    assert res.chosen == [items[0].neuron]
    assert res.spent == 1


def test_fractional_ties_broken_by_neuron():
    items = [CostedIndex(NeuronRef(1, 0), -1.0, 1), CostedIndex(NeuronRef(0, 2), -2.0, 2),
             CostedIndex(NeuronRef(0, 1), -1.0, 1)]
    res = select_fractional(items, 1)
    assert res.chosen == [NeuronRef(0, 1)]


def test_negative_budget_rejected():
    with pytest.raises(ValueError):
        select_fractional([], -1)
    with pytest.raises(ValueError):
        select_exact([], -1)


# ---- exact oracle ------------------------------------------------------------

def test_exact_single_item():
    items = items_from([(-1.0, 5)])
    assert select_exact(items, 4).chosen == []
    assert select_exact(items, 5).chosen == [items[0].neuron]


def test_exact_matches_enumeration_on_12_items(rng):
    for _ in range(100):
        n = int(rng.integers(1, 13))
        items = items_from(zip(np.round(rng.uniform(-5, 1, n), 6), rng.integers(1, 15, n)))
        budget = int(rng.integers(0, sum(it.cost for it in items) + 1))
        res = select_exact(items, budget)
        best, _ = brute_force(items, budget)
        assert res.objective == pytest.approx(best, abs=1e-9)
        assert res.spent <= budget
        assert res.spent == sum(it.cost for it in items if it.neuron in res.chosen)


def test_exact_table_guard():
    items = [CostedIndex(NeuronRef(0, i), -1.0, 10**6) for i in range(20)]
    with pytest.raises(ValueError, match="limit"):
        select_exact(items, MAX_TABLE_CELLS)


# ---- properties ---------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(instances, st.integers(0, 2**31))
def test_greedy_is_lp_optimal(instance, seed):
    pairs, budget = instance
    items = items_from(pairs)
    res = select_fractional(items, budget)
    lam = np.array([it.lambda_min for it in items])
    cost = np.array([it.cost for it in items], dtype=float)
    rng = np.random.default_rng(seed)
    for _ in range(1000 // 60 + 1):
        beta = rng.uniform(size=(60, len(items)))
        load = beta @ cost
        scale = np.minimum(1.0, budget / np.where(load > 0, load, 1.0))
        beta = beta * scale[:, None]
        assert np.all(beta @ cost <= budget + 1e-9)
        assert np.all(res.objective <= beta @ lam + 1e-9)
    assert sum(res.beta[it.neuron] * it.cost for it in items) <= budget + 1e-9


@settings(max_examples=100, deadline=None)
@given(instances)
def test_relaxation_bounds_and_feasibility(instance):
    pairs, budget = instance
    items = items_from(pairs)
    frac = select_fractional(items, budget)
    exact = select_exact(items, budget)
    assert frac.objective <= exact.objective + 1e-9 <= 1e-9
    assert frac.spent <= budget
    assert frac.spent == sum(it.cost for it in items if it.neuron in frac.chosen)
    by_ref = {it.neuron: it for it in items}
    for ref in frac.chosen:
        assert by_ref[ref].lambda_min < 0
        assert frac.beta[ref] > 0.9
    for ref in exact.chosen:
        assert by_ref[ref].lambda_min < 0


# ---- vanilla selection --------------------------------------------------------

def test_vanilla_takes_most_negative():
    items = items_from([(-1.0, 100), (-3.0, 1), (0.5, 1), (-2.0, 50)])
    res = select_vanilla(items, 2)
    assert res.chosen == [items[1].neuron, items[3].neuron]
    assert res.spent == 51
    assert select_vanilla(items, 10).chosen == [items[1].neuron, items[3].neuron, items[0].neuron]
