import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from teamcontracts.core import principal_utility
from teamcontracts.equilibrium import enumerate_equilibria, is_nash
from teamcontracts.exact import (
    alpha_bounds_single,
    brute_force_optimal_contract,
    first_best_gap_single,
    incentive_utility_table,
    min_contract_for,
    randomized_single_agent_gap,
    single_agent_critical_points,
    single_agent_optimal_exact,
    welfare_opt,
    worst_equilibrium_gap,
)
from teamcontracts.instances import (
    expected_max_singleton_gap,
    max_singleton_gap_instance,
    random_coverage_instance,
    random_monotone_table_instance,
    random_xos_instance,
    uniform_additive_instance,
)

# principal utility of each profile at its cheapest sustaining contract,
# two-agent worked example, action ids counted from 0
EXAMPLE_ONE = {
    (0,): 0.3375,
    (1,): 0.414,
    (0, 1): 0.175,
    (2,): 0.24,
    (1, 2): 0.64,
    (0, 2): 0.3375,
}


@pytest.mark.parametrize("s,value", sorted(EXAMPLE_ONE.items()))
def test_example_one_table(ex1, s, value):
    contract, u = min_contract_for(ex1, set(s))
    assert u == pytest.approx(value, abs=1e-9)
    assert principal_utility(ex1, s, contract) == pytest.approx(value, abs=1e-9)


def test_example_one_optimum(ex1):
    res = brute_force_optimal_contract(ex1)
    assert res.profile == frozenset({1, 2})
    assert res.contract.alpha == pytest.approx((0.32, 0.04))
    assert res.utility == pytest.approx(0.64)
    assert res.welfare == pytest.approx(0.75)
    assert welfare_opt(ex1) == (pytest.approx(0.75), frozenset({1, 2}))


def test_uniform_gap():
    inst = uniform_additive_instance(4)
    res = brute_force_optimal_contract(inst)
    assert res.utility == pytest.approx(0.125)
    assert res.welfare == pytest.approx(0.5)
    assert res.gap == pytest.approx(4.0)


def test_max_singleton_critical_points():
    inst = max_singleton_gap_instance(5, 0.5)
    cp = single_agent_critical_points(inst)
    assert cp.alphas == pytest.approx((0.0, 0.5, 0.75, 0.875, 0.9375, 0.96875))
    assert [sorted(s) for s in cp.sets] == [[], [0], [1], [2], [3], [4]]
    gap = first_best_gap_single(inst)
    assert gap.ratio == pytest.approx(expected_max_singleton_gap(5, 0.5))
    assert gap.holds_m and gap.holds_2m
    b = alpha_bounds_single(inst)
    assert b.holds and b.alpha_star == pytest.approx(0.96875)


def _brute_single(inst):
    """Independent oracle: try every pairwise indifference point as the contract."""
    F, C = inst.reward.table(), inst.cost_table()
    cands = {0.0}
    for s, t in itertools.product(range(len(F)), repeat=2):
        if F[s] > F[t] + 1e-12:
            a = (C[s] - C[t]) / (F[s] - F[t])
            if 0 <= a <= 1:
                cands.add(float(a))
    best = 0.0
    for a in cands:
        x = a * F - C
        br = np.flatnonzero(x >= x.max() - 1e-9)
        best = max(best, (1 - a) * F[br].max())
    return best


@given(seed=st.integers(0, 10_000))
def test_envelope_matches_enumeration(seed):
    inst = random_monotone_table_instance(1, 4, seed)
    a, s, u = single_agent_optimal_exact(inst)
    assert u == pytest.approx(brute_force_optimal_contract(inst).utility, abs=1e-9)
    assert u == pytest.approx(_brute_single(inst), abs=1e-9)
    assert is_nash(inst, (a,), s)


@given(seed=st.integers(0, 10_000))
def test_gap_bounds_subadditive(seed):
    inst = random_xos_instance(1, 5, seed=seed)
    gap = first_best_gap_single(inst)
    assert gap.holds_m is True
    assert gap.holds_2m


@given(seed=st.integers(0, 10_000))
def test_gap_bound_general(seed):
    inst = random_monotone_table_instance(1, 5, seed)
    assert first_best_gap_single(inst).holds_2m


@given(seed=st.integers(0, 10_000))
def test_alpha_bounds(seed):
    inst = random_coverage_instance(1, 5, 8, seed)
    b = alpha_bounds_single(inst)
    assert b is None or b.holds


@given(seed=st.integers(0, 10_000))
def test_randomized_gap(seed):
    inst = random_coverage_instance(3, 2, 8, seed)
    rep = randomized_single_agent_gap(inst)
    assert rep.holds
    assert sum(rep.weights) == pytest.approx(1.0)


def test_incentive_table_consistent(ex1):
    g = incentive_utility_table(ex1)
    for s in range(8):
        members = {j for j in range(3) if s >> j & 1}
        _, u = min_contract_for(ex1, members)
        assert g[s] == pytest.approx(u) or (np.isinf(g[s]) and np.isinf(u))


def test_worst_equilibrium_gap(ex1):
    rep = worst_equilibrium_gap(ex1, (0.32, 0.04))
    assert rep.count == len(enumerate_equilibria(ex1, (0.32, 0.04)))
    assert rep.best == pytest.approx(0.64)
    assert rep.worst_profile == frozenset({2})
    assert rep.worst_ratio > rep.best_ratio
