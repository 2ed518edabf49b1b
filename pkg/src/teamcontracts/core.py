"""Instances, contracts, action profiles and the three utility functionals.

Action and agent ids are dense 0-based integers. Internally a set of actions
is an ``int`` bitmask (bit ``j`` set iff action ``j`` is chosen); the public
functions accept either a mask, an :class:`ActionProfile` or any iterable of
action ids.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Iterator, Union

import numpy as np

if TYPE_CHECKING:
    from .oracles import RewardOracle

TIE_BREAKS = ("larger_f_then_lex", "lex")


@dataclass(frozen=True)
class NumericConfig:
    """Comparison tolerance and enumeration caps.

    ``tol`` is used for every weak inequality: ``x >= y`` means
    ``x >= y - tol``.
    """

    tol: float = 1e-9
    tie_break: str = "larger_f_then_lex"
    demand_cap: int = 22
    check_cap: int = 14
    enum_cap: int = 16

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"unknown tie-break policy {self.tie_break!r}")


def get_config() -> NumericConfig:
    """Default config; ``CONTRACTS_TOLERANCE`` overrides the tolerance."""
    env = os.environ.get("CONTRACTS_TOLERANCE")
    if env:
        return NumericConfig(tol=float(env))
    return NumericConfig()


def resolve_tol(tol: float | None) -> float:
    return get_config().tol if tol is None else float(tol)


# --------------------------------------------------------------------------
# bitmask helpers

SetLike = Union[int, "ActionProfile", Iterable[int]]


def mask_of(s: SetLike) -> int:
    if isinstance(s, (int, np.integer)):
        return int(s)
    if isinstance(s, ActionProfile):
        s = s.chosen
    mask = 0
    for j in s:
        j = int(j)
        if j < 0:
            raise IndexError(f"negative action id {j}")
        mask |= 1 << j
    return mask


def members(mask: int) -> tuple[int, ...]:
    out = []
    j = 0
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return tuple(out)


def submasks(mask: int) -> Iterator[int]:
    """All submasks of ``mask``, including 0 and ``mask`` itself."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def lex_key(mask: int) -> tuple[int, ...]:
    # lexicographic order on sorted id tuples
    return members(mask)


def subset_sum_table(weights) -> np.ndarray:
    """``t[mask] = sum(weights[j] for j in mask)`` for every mask.

    Built by doubling, so infinite weights never meet a zero multiplier.
    """
    t = np.zeros(1)
    # huge finite weights (c / alpha with tiny alpha) may overflow to inf, as intended
    with np.errstate(over="ignore"):
        for w in weights:
            t = np.concatenate([t, t + float(w)])
    return t


def popcount_table(m: int) -> np.ndarray:
    t = np.zeros(1, dtype=np.int64)
    for _ in range(m):
        t = np.concatenate([t, t + 1])
    return t


# --------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class ActionProfile:
    """A set of chosen actions S; S_i and S_{-i} are derived views."""

    chosen: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "chosen", frozenset(int(j) for j in self.chosen))

    @classmethod
    def from_mask(cls, mask: int) -> "ActionProfile":
        return cls(frozenset(members(mask)))

    @property
    def mask(self) -> int:
        return mask_of(self.chosen)

    def of_agent(self, inst: "Instance", i: int) -> frozenset:
        return frozenset(members(self.mask & inst.agent_mask(i)))

    def others(self, inst: "Instance", i: int) -> frozenset:
        return frozenset(members(self.mask & ~inst.agent_mask(i)))

    def __iter__(self):
        return iter(sorted(self.chosen))

    def __len__(self):
        return len(self.chosen)


@dataclass(frozen=True)
class Contract:
    """Linear contract: agent i receives fraction ``alpha[i]`` of the reward."""

    alpha: tuple

    def __post_init__(self):
        alpha = tuple(float(x) for x in self.alpha)
        for x in alpha:
            if not (0.0 <= x <= 1.0):
                raise ValueError(f"contract entries must lie in [0, 1], got {x}")
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def zeros(cls, n: int) -> "Contract":
        return cls((0.0,) * n)

    def __getitem__(self, i):
        return self.alpha[i]

    def __len__(self):
        return len(self.alpha)

    @property
    def total(self) -> float:
        return math.fsum(self.alpha)


@dataclass(frozen=True, eq=False)
class Instance:
    """Multi-agent multi-action principal-agent instance.

    Parameters
    ----------
    n : int
        Number of agents.
    owner : tuple of int
        ``owner[j]`` is the agent controlling action ``j``.
    costs : tuple of float
        Cost of each action.
    reward : RewardOracle
        Success probability function over all ``m`` actions.
    r : float
        Reward for success (defaults to 1).
    """

    n: int
    owner: tuple
    costs: tuple
    reward: "RewardOracle"
    r: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "owner", tuple(int(i) for i in self.owner))
        object.__setattr__(self, "costs", tuple(float(c) for c in self.costs))
        object.__setattr__(self, "r", float(self.r))
        if len(self.owner) != len(self.costs):
            raise ValueError("owner and costs must have one entry per action")
        masks = [0] * self.n
        for j, i in enumerate(self.owner):
            if 0 <= i < self.n:
                masks[i] |= 1 << j
        object.__setattr__(self, "_agent_masks", tuple(masks))

    @property
    def m(self) -> int:
        return len(self.costs)

    @property
    def full_mask(self) -> int:
        return (1 << self.m) - 1

    def agent_mask(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"agent {i} out of range (n={self.n})")
        return self._agent_masks[i]

    def agent_actions(self, i: int) -> tuple[int, ...]:
        return members(self.agent_mask(i))

    def cost(self, s: SetLike) -> float:
        mask = mask_of(s)
        self._check_mask(mask)
        return math.fsum(self.costs[j] for j in members(mask))

    def zero_cost_mask(self) -> int:
        return mask_of(j for j, c in enumerate(self.costs) if c == 0)

    def cost_table(self) -> np.ndarray:
        return subset_sum_table(self.costs)

    def _check_mask(self, mask: int) -> None:
        if mask >> self.m:
            raise IndexError(f"action id out of range (m={self.m})")


def as_contract(a) -> Contract:
    return a if isinstance(a, Contract) else Contract(tuple(a))


# --------------------------------------------------------------------------
# utilities


def agent_utility(inst: Instance, s: SetLike, a, i: int) -> float:
    """``alpha_i * f(S) * r - c(S_i)``."""
    a = as_contract(a)
    mask = mask_of(s)
    inst._check_mask(mask)
    own = mask & inst.agent_mask(i)
    if mask == 0:
        return 0.0
    return a[i] * inst.reward.value_mask(mask) * inst.r - inst.cost(own)


def principal_utility(inst: Instance, s: SetLike, a) -> float:
    """``(1 - sum_i alpha_i) * f(S) * r``."""
    a = as_contract(a)
    if len(a) != inst.n:
        raise IndexError("contract length differs from the number of agents")
    mask = mask_of(s)
    inst._check_mask(mask)
    if mask == 0:
        return 0.0
    return (1.0 - a.total) * inst.reward.value_mask(mask) * inst.r


def welfare(inst: Instance, s: SetLike) -> float:
    mask = mask_of(s)
    inst._check_mask(mask)
    if mask == 0:
        return 0.0
    return inst.reward.value_mask(mask) * inst.r - inst.cost(mask)


def validate_instance(inst: Instance, check_monotone: bool = False,
                      tol: float | None = None) -> list[str]:
    """Return a list of violations (empty when the instance is well formed).

    Monotonicity is checked exhaustively, so it is opt-in.
    """
    tol = resolve_tol(tol)
    out = []
    for j, c in enumerate(inst.costs):
        if not math.isfinite(c):
            out.append(f"non-finite cost for action {j}")
        elif c < 0:
            out.append(f"negative cost for action {j}")
    for j, i in enumerate(inst.owner):
        if not 0 <= i < inst.n:
            out.append(f"action {j} has no valid owner")
    if inst.reward.m != inst.m:
        out.append(f"reward ground set has {inst.reward.m} actions, instance has {inst.m}")
        return out
    if not inst.r > 0:
        out.append("reward scale r must be positive")
    f0 = inst.reward.evaluate(np.array([0]))[0]
    if abs(f0) > tol:
        out.append(f"not normalized: f(empty) = {f0}")
    if check_monotone:
        from .oracles import check_monotone
        if not check_monotone(inst.reward, tol=tol):
            out.append("reward is not monotone")
    return out
