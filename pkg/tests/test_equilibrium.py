import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from teamcontracts.core import Contract, mask_of
from teamcontracts.equilibrium import (
    best_response,
    best_response_dynamics,
    check_doubling,
    enumerate_equilibria,
    equilibrium_via_demand,
    feasible_alpha_intervals,
    is_nash,
    is_subset_stable,
    nash_flags,
    potential,
    potential_table,
    subset_stability_lower_bounds,
)
from teamcontracts.instances import (
    example_one,
    prop_b1_instance,
    random_coverage_instance,
    xos_bad_equilibrium_instance,
)


def test_example_one_intervals(ex1):
    iv = feasible_alpha_intervals(ex1, {1, 2})
    assert iv.feasible
    assert iv.lo == pytest.approx((0.32, 0.04))
    assert iv.contract().alpha == pytest.approx((0.32, 0.04))
    # {0, 2} needs alpha_0 exactly 0.32: a knife edge
    knife = feasible_alpha_intervals(ex1, {0, 2})
    assert knife.lo[0] == pytest.approx(knife.hi[0])


def test_example_one_equilibria(ex1):
    rep = enumerate_equilibria(ex1, (0.32, 0.04))
    assert set(rep.profiles) == {frozenset({0}), frozenset({2}), frozenset({1, 2})}
    assert rep.best == pytest.approx(0.64)
    assert rep.best_profile == frozenset({1, 2})
    assert rep.worst_profile == frozenset({2})
    assert {1, 2} in rep


def test_subset_lower_bounds(ex1):
    assert subset_stability_lower_bounds(ex1, {1}) == pytest.approx((0.32, 0.0))
    assert subset_stability_lower_bounds(ex1, set()) == (0.0, 0.0)


def test_nash_boundary(ex1):
    iv = feasible_alpha_intervals(ex1, {1, 2})
    assert is_nash(ex1, iv.lo, {1, 2})
    delta = 1e-6
    below = (iv.lo[0] - delta, iv.lo[1])
    assert not is_nash(ex1, below, {1, 2})


def test_best_response(ex1):
    assert best_response(ex1, (0.1, 0.04), {2}, 0) == frozenset()
    # {0} and {1} tie at 0.08; the larger reward wins
    assert best_response(ex1, (0.32, 0.04), {2}, 0) == frozenset({1})
    assert best_response(ex1, (0.9, 0.04), {2}, 0) == frozenset({1})


def test_potential_matches_table(ex1):
    a = Contract((0.4, 0.2))
    table = potential_table(ex1, a)
    for s in range(8):
        members = {j for j in range(3) if s >> j & 1}
        assert potential(ex1, a, members) == pytest.approx(table[s])
    assert potential(ex1, (0.0, 0.2), {0}) == -np.inf


def test_xos_bad_equilibrium_exists():
    k = 4
    inst = xos_bad_equilibrium_instance(k)
    a = feasible_alpha_intervals(inst, range(2 * k)).contract()
    rep = enumerate_equilibria(inst, a)
    assert frozenset(range(2 * k)) in rep
    # the free actions alone also form an equilibrium worth far less
    assert frozenset(range(k)) in rep


def test_prop_b1_single_agent_equilibrium():
    n = 8
    inst = prop_b1_instance(n)
    a = (1.0 / (2 * n),) * n
    rep = enumerate_equilibria(inst, a)
    assert frozenset({0}) in rep
    assert rep.worst <= rep.best


def _alpha(data, n, hi=0.45):
    return tuple(data.draw(st.lists(st.floats(0, hi), min_size=n, max_size=n)))


@given(seed=st.integers(0, 10_000), data=st.data())
def test_demand_equilibrium_is_nash_and_maximizes_potential(seed, data):
    inst = random_coverage_instance(3, 2, 8, seed)
    a = _alpha(data, 3)
    s = equilibrium_via_demand(inst, a)
    assert is_nash(inst, a, s.chosen)
    phi = potential_table(inst, a)
    assert potential(inst, a, s.chosen) >= phi.max() - 1e-9


@given(seed=st.integers(0, 10_000), data=st.data())
def test_dynamics_reach_nash(seed, data):
    inst = random_coverage_instance(3, 2, 8, seed)
    a = _alpha(data, 3)
    start = data.draw(st.sets(st.integers(0, inst.m - 1)))
    s = best_response_dynamics(inst, a, start, seed=seed)
    assert is_nash(inst, a, s.chosen)


@given(seed=st.integers(0, 10_000), data=st.data())
def test_nash_implies_subset_stable(seed, data):
    inst = random_coverage_instance(2, 3, 8, seed)
    a = _alpha(data, 2)
    full = nash_flags(inst, a)
    sub = nash_flags(inst, a, subset_only=True)
    assert not (full & ~sub).any()
    for s in np.flatnonzero(sub)[:5]:
        assert is_subset_stable(inst, a, {j for j in range(inst.m) if s >> j & 1})


@given(seed=st.integers(0, 10_000), data=st.data())
def test_doubling_lemma(seed, data):
    inst = random_coverage_instance(3, 2, 8, seed)
    s = data.draw(st.sets(st.integers(0, inst.m - 1), min_size=1))
    lb = subset_stability_lower_bounds(inst, s)
    if lb is None or max(lb) > 0.45:
        return
    assert check_doubling(inst, lb, s, eps=1e-3)


def test_doubling_rejects_unstable(ex1):
    with pytest.raises(ValueError):
        check_doubling(ex1, (0.0, 0.0), {1}, eps=0.01)
    with pytest.raises(ValueError):
        check_doubling(ex1, (0.5, 0.1), {1}, eps=0.0)


def test_nash_flags_agree_with_is_nash(ex1):
    a = (0.32, 0.04)
    flags = nash_flags(ex1, a)
    for s in range(8):
        members = {j for j in range(3) if s >> j & 1}
        assert flags[s] == is_nash(ex1, a, members)
    assert mask_of({1, 2}) == 6
