import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from teamcontracts.instances import example_one, hidden_team_instance, random_coverage_instance
from teamcontracts.oracles import (
    AdditiveReward,
    CoverageReward,
    HiddenTeamReward,
    QueryCounter,
    RestrictedReward,
    TableReward,
    UniformReward,
    XOSReward,
    brute_force_demand,
    capped,
    check_gross_substitutes_triplet,
    check_monotone,
    check_monotone_submodular,
    check_subadditive,
    demand_surplus,
    hidden_team_demand,
    hidden_team_value,
)


def test_table_reward_lookup():
    f = example_one().reward
    assert f.value({1, 2}) == 1.0
    assert f.value([0]) == pytest.approx(7 / 16)
    assert f.value(()) == 0.0
    assert f.counter.value_queries == 3


def test_table_reward_rejects_bad_input():
    with pytest.raises(ValueError):
        TableReward({"": 0.0, "0": 0.5}, m=2)  # subsets of {0,1} missing
    with pytest.raises(ValueError):
        TableReward([0.0, 0.5, 0.2, 0.1])  # not monotone


def test_counter_tracks_queries():
    f = AdditiveReward([0.1, 0.2, 0.3])
    f.value({0})
    f.value_mask(3)
    brute_force_demand(f, [0.05, 0.3, 0.0])
    assert f.counter.snapshot() == {"value_queries": 2, "demand_queries": 1}
    f.table()
    assert f.counter.total == 3
    f.counter.reset()
    assert f.counter.total == 0
    assert isinstance(f.counter, QueryCounter)


def test_hidden_team_value_pieces():
    # frozen from the closed form, k = 4
    got = [hidden_team_value(x, y, 4) for x, y in [(0, 0), (1, 0), (0, 1), (2, 2), (0, 3), (4, 0)]]
    assert got == pytest.approx([0.0, 1.0, 1.0, 2.0, math.sqrt(2) + 1 / (2 + math.sqrt(2)), 2.0])


def test_hidden_team_is_submodular_not_gs():
    f = HiddenTeamReward(8, [1, 3, 4, 6])
    assert check_monotone_submodular(f)
    assert check_gross_substitutes_triplet(f) is not True
    assert f.value(range(8)) == pytest.approx(2.0)


def test_example_one_structure():
    f = example_one().reward
    assert check_monotone_submodular(f)
    w = check_gross_substitutes_triplet(f)
    assert w is not True
    assert (w.lhs, w.rhs) == pytest.approx((1.3125, 1.4375))


def test_non_monotone_detected():
    f = TableReward([0.0, 0.5, 0.4, 0.3], validate=False)
    assert not check_monotone(f)
    assert not check_monotone_submodular(f)


def test_xos_subadditive_not_submodular():
    f = XOSReward([[0.5, 0.5, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    assert check_subadditive(f)
    assert check_monotone(f)


def test_coverage_value():
    f = CoverageReward([0.5, 0.25, 0.25], [[0, 1], [1, 2]])
    assert f.value({0}) == pytest.approx(0.75)
    assert f.value({0, 1}) == pytest.approx(1.0)
    assert check_monotone_submodular(f)


def test_uniform_is_additive():
    f = UniformReward(4)
    assert f.value({0, 2}) == pytest.approx(0.5)
    assert f.unit == pytest.approx(0.25)


def test_capped_and_restricted():
    f = UniformReward(4)
    g = capped(f, 0.6)
    assert g.value({0, 1, 2}) == pytest.approx(0.6)
    assert g.value({0}) == pytest.approx(0.25)
    r = RestrictedReward(f, [1, 3], base=0b0001, marginal=True)
    assert r.m == 2
    assert r.value({0}) == pytest.approx(0.25)
    assert r.value({0, 1}) == pytest.approx(0.5)


def test_brute_force_demand_tie_break():
    f = AdditiveReward([0.3, 0.3])
    # both actions priced at their value: every set ties, the larger f wins
    assert brute_force_demand(f, [0.3, 0.3]) == frozenset({0, 1})
    assert brute_force_demand(f, [0.4, 0.2]) == frozenset({1})


@given(seed=st.integers(0, 5000), k=st.sampled_from([4, 6]),
       prices=st.lists(st.floats(0, 1.2), min_size=10, max_size=10))
def test_hidden_team_demand_matches_brute_force(seed, k, prices):
    inst = hidden_team_instance(k, 10, seed=seed)
    f = inst.reward
    fast = hidden_team_demand(f, prices)
    slow = brute_force_demand(f, prices)
    assert demand_surplus(f, prices, fast) == pytest.approx(demand_surplus(f, prices, slow), abs=1e-9)


@given(seed=st.integers(0, 5000))
def test_random_coverage_is_monotone_submodular(seed):
    inst = random_coverage_instance(2, 3, 8, seed)
    assert check_monotone_submodular(inst.reward)
    assert inst.reward.value(range(inst.m)) <= 1.0 + 1e-12


@given(seed=st.integers(0, 5000), prices=st.lists(st.floats(0, 0.5), min_size=5, max_size=5))
def test_demand_is_optimal(seed, prices):
    f = random_coverage_instance(1, 5, 8, seed).reward
    d = brute_force_demand(f, prices)
    table = f.table()
    p = np.asarray(prices)
    best = max(table[s] - sum(p[j] for j in range(5) if s >> j & 1) for s in range(32))
    assert demand_surplus(f, prices, d) == pytest.approx(best, abs=1e-12)
