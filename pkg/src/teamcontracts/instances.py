"""Canonical and random instance generators.

Action ids are 0-based. Worked examples that number actions from 1 map
action ``j`` to id ``j - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Instance
from .oracles import (
    CoverageReward,
    HiddenTeamReward,
    TableReward,
    UniformReward,
    XOSReward,
)


def _binary_agents(m: int) -> tuple:
    return tuple(range(m))


def example_one(eps: float = 0.01) -> Instance:
    """Two agents, three actions; one agent does less when the other does less.

    Agent 0 owns actions 0 and 1, agent 1 owns action 2. The reward is
    submodular but not gross substitutes.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    values = {
        "": 0.0,
        "0": 7 / 16,
        "1": 3 / 4,
        "2": 1 / 4,
        "0,1": 7 / 8,
        "0,2": 9 / 16,
        "1,2": 1.0,
        "0,1,2": 1.0,
    }
    return Instance(n=2, owner=(0, 0, 1), costs=(0.1, 0.24, eps),
                    reward=TableReward(values, m=3))


def hidden_team_instance(k: int, m: int, seed=None, team: Sequence[int] | None = None) -> Instance:
    """``m`` single-action agents, hidden team of size ``k`` drawn from ``seed``.

    Every action costs ``1 / (8 k^{3/2})``. The team is available as
    ``inst.reward.team`` for white-box checks.
    """
    if k % 2 or not 4 <= k < m:
        raise ValueError("hidden team needs even k with 4 <= k < m")
    if team is None:
        rng = np.random.default_rng(seed)
        team = sorted(int(j) for j in rng.choice(m, size=k, replace=False))
    cost = 1.0 / (8.0 * k ** 1.5)
    return Instance(n=m, owner=_binary_agents(m), costs=(cost,) * m,
                    reward=HiddenTeamReward(m, team))


def xos_bad_equilibrium_instance(k: int) -> Instance:
    """``2k`` single-action agents where a tiny equilibrium survives.

    ``f(S) = max(|S|, k^2 |S \\ [k]|, 2 [S nonempty]) / k^3``; the first ``k``
    actions are free, the others cost ``(k^2 - k/2) / k^3``.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    n = 2 * k
    k3 = float(k ** 3)
    clauses = [np.full(n, 1.0 / k3)]
    clauses.append(np.array([0.0] * k + [k * k / k3] * k))
    for j in range(n):
        row = np.zeros(n)
        row[j] = 2.0 / k3
        clauses.append(row)
    costs = (0.0,) * k + ((k * k - k / 2.0) / k3,) * k
    return Instance(n=n, owner=_binary_agents(n), costs=costs, reward=XOSReward(clauses))


def uniform_additive_instance(n: int) -> Instance:
    """``f(S) = |S|/n``, each of the ``n`` single-action agents costs ``1/(2n)``."""
    if n < 1:
        raise ValueError("n must be positive")
    return Instance(n=n, owner=_binary_agents(n), costs=(1.0 / (2 * n),) * n,
                    reward=UniformReward(n))


def prop_b1_instance(n: int) -> Instance:
    """XOS instance whose best contract also sustains a one-agent equilibrium.

    Clauses ``|S|/n`` and ``2 [i in S]/n`` for each ``i``; costs ``1/(2n^2)``.
    """
    if n <= 2:
        raise ValueError("n must exceed 2")
    clauses = [np.full(n, 1.0 / n)]
    for i in range(n):
        row = np.zeros(n)
        row[i] = 2.0 / n
        clauses.append(row)
    return Instance(n=n, owner=_binary_agents(n), costs=(1.0 / (2 * n * n),) * n,
                    reward=XOSReward(clauses))


def _owners(n: int, actions_per_agent) -> tuple:
    if isinstance(actions_per_agent, (int, np.integer)):
        sizes = [int(actions_per_agent)] * n
    else:
        sizes = [int(x) for x in actions_per_agent]
        if len(sizes) != n:
            raise ValueError("need one action count per agent")
    if min(sizes, default=1) < 1:
        raise ValueError("every agent needs at least one action")
    return tuple(i for i, k in enumerate(sizes) for _ in range(k))


def _costs(rng, m: int, cost_range, zero_cost_prob: float) -> tuple:
    lo, hi = cost_range
    if not 0 <= lo <= hi:
        raise ValueError("cost range must satisfy 0 <= lo <= hi")
    c = np.round(rng.uniform(lo, hi, size=m), 6)
    if zero_cost_prob > 0:
        c[rng.random(m) < zero_cost_prob] = 0.0
    return tuple(float(x) for x in c)


def random_coverage_instance(n: int, actions_per_agent=2, universe: int = 8, seed=None, *,
                             cost_range=(0.0, 0.2), zero_cost_prob: float = 0.0,
                             density: float = 0.35) -> Instance:
    """Random weighted-coverage instance (monotone submodular, ``f(A) <= 1``).

    Deterministic for a fixed ``seed``; weights and costs are rounded to six
    decimals so the instance survives a JSON round trip unchanged.
    """
    if n < 1 or universe < 1:
        raise ValueError("sizes must be positive")
    owner = _owners(n, actions_per_agent)
    rng = np.random.default_rng(seed)
    reward = CoverageReward.random(len(owner), universe, rng, density=density)
    costs = _costs(rng, len(owner), cost_range, zero_cost_prob)
    return Instance(n=n, owner=owner, costs=costs, reward=reward)


def random_monotone_table_instance(n: int, actions_per_agent=2, seed=None, *,
                                   cost_range=(0.0, 0.2), zero_cost_prob: float = 0.0
                                   ) -> Instance:
    """Random monotone reward with no structure beyond monotonicity.

    Draws independent values per subset and takes the monotone closure
    ``f(S) = max_{T <= S} v(T)``, scaled so that ``f(A) = 1``.
    """
    owner = _owners(n, actions_per_agent)
    m = len(owner)
    rng = np.random.default_rng(seed)
    v = np.round(rng.random(1 << m), 6)
    v[0] = 0.0
    masks = np.arange(1 << m)
    for j in range(m):
        has = (masks >> j) & 1 == 1
        v[has] = np.maximum(v[has], v[masks[has] ^ (1 << j)])
    v = v / v[-1] if v[-1] > 0 else v
    costs = _costs(rng, m, cost_range, zero_cost_prob)
    return Instance(n=n, owner=owner, costs=costs, reward=TableReward(v))


def random_xos_instance(n: int, actions_per_agent=2, clauses: int = 3, seed=None, *,
                        cost_range=(0.0, 0.2), zero_cost_prob: float = 0.0) -> Instance:
    """Random XOS reward: maximum of ``clauses`` random additive functions.

    Clause weights are uniform and scaled so that ``f(A) = 1``.
    """
    owner = _owners(n, actions_per_agent)
    m = len(owner)
    rng = np.random.default_rng(seed)
    a = np.round(rng.uniform(0.0, 1.0, size=(clauses, m)) * (rng.random((clauses, m)) < 0.6), 6)
    top = a.sum(axis=1).max()
    a = a / top if top > 0 else a
    costs = _costs(rng, m, cost_range, zero_cost_prob)
    return Instance(n=n, owner=owner, costs=costs, reward=XOSReward(a))


def max_singleton_gap_instance(m: int, delta: float = 0.5) -> Instance:
    """Single agent, ``f(S) = max_{j in S} f_j``, with first-best gap near ``m``.

    The ``j``-th critical contract is ``1 - delta^j`` and every critical
    contract yields the same principal utility, while the welfare grows by
    ``1 - delta`` per action. The gap is ``1 + (m - 1)(1 - delta)``.
    """
    if m < 1 or not 0 < delta < 1:
        raise ValueError("need m >= 1 and 0 < delta < 1")
    fv = [0.0]
    cv = [0.0]
    for j in range(1, m + 1):
        a = 1.0 - delta ** j
        fv.append(delta ** -j)
        cv.append(cv[-1] + a * (fv[j] - fv[j - 1]))
    top = fv[-1]
    clauses = np.diag([x / top for x in fv[1:]])
    costs = tuple(x / top for x in cv[1:])
    return Instance(n=1, owner=(0,) * m, costs=costs, reward=XOSReward(clauses))


@dataclass(frozen=True)
class GeneratorSpec:
    """A generator family name plus its keyword parameters."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in GENERATORS:
            raise ValueError(f"unknown generator {self.kind!r}; choose from {sorted(GENERATORS)}")

    def build(self) -> Instance:
        try:
            return GENERATORS[self.kind](**self.params)
        except TypeError as exc:
            raise ValueError(f"bad parameters for {self.kind}: {exc}") from None


GENERATORS = {
    "example1": example_one,
    "hidden-team": hidden_team_instance,
    "xos-bad": xos_bad_equilibrium_instance,
    "uniform": uniform_additive_instance,
    "prop-b1": prop_b1_instance,
    "coverage": random_coverage_instance,
    "monotone-table": random_monotone_table_instance,
    "max-singleton": max_singleton_gap_instance,
    "xos": random_xos_instance,
}


def expected_max_singleton_gap(m: int, delta: float) -> float:
    return 1.0 + (m - 1) * (1.0 - delta)


__all__ = [
    "GeneratorSpec",
    "GENERATORS",
    "example_one",
    "expected_max_singleton_gap",
    "hidden_team_instance",
    "max_singleton_gap_instance",
    "prop_b1_instance",
    "random_coverage_instance",
    "random_monotone_table_instance",
    "random_xos_instance",
    "uniform_additive_instance",
    "xos_bad_equilibrium_instance",
]
