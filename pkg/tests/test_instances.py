import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from teamcontracts.core import validate_instance
from teamcontracts.instances import (
    GENERATORS,
    GeneratorSpec,
    example_one,
    hidden_team_instance,
    max_singleton_gap_instance,
    prop_b1_instance,
    random_coverage_instance,
    random_monotone_table_instance,
    random_xos_instance,
    uniform_additive_instance,
    xos_bad_equilibrium_instance,
)
from teamcontracts.oracles import check_monotone_submodular, check_subadditive


def test_example_one_shape(ex1):
    assert (ex1.n, ex1.m) == (2, 3)
    assert ex1.owner == (0, 0, 1)
    assert ex1.costs == (0.1, 0.24, 0.01)
    with pytest.raises(ValueError):
        example_one(0.0)


def test_hidden_team_parameters():
    inst = hidden_team_instance(4, 8, seed=3)
    assert inst.costs[0] == pytest.approx(1 / 64)
    assert len(inst.reward.team) == 4
    assert hidden_team_instance(4, 8, seed=3).reward.team == inst.reward.team
    assert hidden_team_instance(4, 8, team=[0, 1, 2, 3]).reward.team == (0, 1, 2, 3)
    for k, m in [(3, 8), (2, 8), (4, 4)]:
        with pytest.raises(ValueError):
            hidden_team_instance(k, m)


def test_xos_bad_values():
    k = 4
    inst = xos_bad_equilibrium_instance(k)
    f = inst.reward
    assert f.value(range(k)) == pytest.approx(k / k ** 3)
    assert f.value(range(2 * k)) == pytest.approx(k ** 3 / k ** 3)
    assert f.value({0}) == pytest.approx(2 / k ** 3)
    assert inst.costs[:k] == (0.0,) * k


def test_prop_b1_values():
    inst = prop_b1_instance(8)
    assert inst.reward.value({3}) == pytest.approx(2 / 8)
    assert inst.reward.value(range(8)) == pytest.approx(1.0)
    assert inst.costs[0] == pytest.approx(1 / 128)
    with pytest.raises(ValueError):
        prop_b1_instance(2)


def test_uniform():
    inst = uniform_additive_instance(4)
    assert inst.costs == (0.125,) * 4


def test_max_singleton_closed_form():
    inst = max_singleton_gap_instance(4, 0.5)
    assert inst.reward.value(range(4)) == pytest.approx(1.0)
    assert check_subadditive(inst.reward)
    with pytest.raises(ValueError):
        max_singleton_gap_instance(3, 1.0)


@given(seed=st.integers(0, 2 ** 31 - 1))
def test_random_families_valid(seed):
    for inst in (random_coverage_instance(2, 2, 8, seed),
                 random_monotone_table_instance(2, 2, seed),
                 random_xos_instance(2, 2, 3, seed)):
        assert validate_instance(inst, check_monotone=True) == []
        assert inst.reward.value(range(inst.m)) <= 1.0 + 1e-12
    assert check_monotone_submodular(random_coverage_instance(2, 2, 8, seed).reward)
    assert check_subadditive(random_xos_instance(2, 2, 3, seed).reward)


def test_seeded_generators_are_deterministic():
    a = random_coverage_instance(2, 3, 8, 42)
    b = random_coverage_instance(2, 3, 8, 42)
    assert a.costs == b.costs
    assert (a.reward.table() == b.reward.table()).all()


def test_zero_cost_probability():
    inst = random_coverage_instance(3, 2, 8, 1, zero_cost_prob=1.0)
    assert inst.costs == (0.0,) * 6


def test_generator_spec():
    assert set(GENERATORS) >= {"example1", "hidden-team", "coverage", "xos"}
    inst = GeneratorSpec("uniform", {"n": 3}).build()
    assert inst.n == 3
    with pytest.raises(ValueError):
        GeneratorSpec("nope")
    with pytest.raises(ValueError):
        GeneratorSpec("uniform", {"bogus": 1}).build()


def test_actions_per_agent_list():
    inst = random_coverage_instance(2, [1, 3], 8, 0)
    assert inst.owner == (0, 1, 1, 1)
    with pytest.raises(ValueError):
        random_coverage_instance(2, [1], 8, 0)
    assert not math.isnan(inst.reward.value({0}))
