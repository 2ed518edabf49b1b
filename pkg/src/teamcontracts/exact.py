"""Exhaustive reference oracles: optimal contracts, critical points, gap reports.

Everything here enumerates subsets and is meant for desk-scale instances.
Reward values are read through uncounted table evaluations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Contract,
    Instance,
    as_contract,
    get_config,
    mask_of,
    members,
    resolve_tol,
    submasks,
)
from .equilibrium import AlphaInterval, enumerate_equilibria, feasible_alpha_intervals
from .oracles import check_subadditive, select_best

# rough budget (array cells) for the vectorised optimal-contract search
WORK_CAP = 1 << 27


def _gap_ratio(opt: float, utility: float) -> float:
    if opt <= 0:
        return 1.0
    if utility <= 0:
        return math.inf
    return opt / utility


def welfare_opt(inst: Instance, *, cap: int | None = None,
                tol: float | None = None) -> tuple[float, frozenset]:
    """First-best welfare ``max_S r f(S) - c(S)`` and a maximiser.

    Enumerates when ``m`` is within the demand cap, otherwise asks the
    reward's demand oracle at prices ``c / r``.
    """
    tol = resolve_tol(tol)
    cap = get_config().demand_cap if cap is None else cap
    if inst.m <= cap:
        f = inst.reward.table() * inst.r
        w = f - inst.cost_table()
        s = select_best(w, f, tol)
        return float(w[s]), frozenset(members(s))
    s = mask_of(inst.reward.demand(np.asarray(inst.costs) / inst.r))
    val = inst.reward.evaluate([s])[0] * inst.r - inst.cost(s)
    return float(val), frozenset(members(s))


def _interval_tables(inst: Instance, tol: float):
    """Vectorised :func:`feasible_alpha_intervals` over every profile.

    Returns ``(lo, feasible)`` with ``lo`` of shape ``(n, 2^m)``.
    """
    m, n = inst.m, inst.n
    work = sum(1 << len(inst.agent_actions(i)) for i in range(n)) << m
    if work > WORK_CAP:
        raise ValueError("instance too large for exhaustive contract search")
    f = inst.reward.table() * inst.r
    c = inst.cost_table()
    masks = np.arange(1 << m, dtype=np.int64)
    lo = np.zeros((n, masks.size))
    feasible = np.ones(masks.size, dtype=bool)
    for i in range(n):
        mi = inst.agent_mask(i)
        own = masks & mi
        rest = masks & ~mi
        low = np.zeros(masks.size)
        high = np.ones(masks.size)
        for sub in submasks(mi):
            coef = f - f[rest | sub]
            rhs = c[own] - c[sub]
            pos = coef > tol
            neg = coef < -tol
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = rhs / coef
            low = np.where(pos, np.maximum(low, ratio), low)
            high = np.where(neg, np.minimum(high, ratio), high)
            feasible &= ~(~pos & ~neg & (rhs > tol))
        feasible &= low <= high + tol
        lo[i] = low
    return lo, feasible


def min_contract_for(inst: Instance, s, *, tol: float | None = None):
    """Cheapest contract sustaining ``S`` as an equilibrium and its utility.

    Returns ``(contract, utility)``; ``(None, -inf)`` when no contract in
    ``[0, 1]^n`` makes ``S`` an equilibrium.
    """
    iv: AlphaInterval = feasible_alpha_intervals(inst, s, tol=tol)
    if not iv.feasible:
        return None, -math.inf
    a = iv.contract()
    fs = float(inst.reward.evaluate([mask_of(s)])[0]) * inst.r
    return a, (1.0 - a.total) * fs


def incentive_utility_table(inst: Instance, *, tol: float | None = None) -> np.ndarray:
    """Principal utility of the cheapest contract sustaining each profile.

    Entry ``S`` (as a bitmask) is ``-inf`` when no contract sustains ``S``.
    """
    tol = resolve_tol(tol)
    lo, feasible = _interval_tables(inst, tol)
    f = inst.reward.table() * inst.r
    return np.where(feasible, (1.0 - lo.sum(axis=0)) * f, -np.inf)


@dataclass(frozen=True)
class OptimalContractResult:
    """Exact optimum over pure equilibria with componentwise-minimal contracts."""

    profile: frozenset
    contract: Contract
    utility: float
    welfare: float
    gap: float


def brute_force_optimal_contract(inst: Instance, *, tol: float | None = None,
                                 cap: int | None = None) -> OptimalContractResult:
    """Best ``(1 - sum lo) r f(S)`` over all sustainable profiles ``S``.

    Ties prefer larger ``f`` and then the lexicographically smallest profile.
    """
    tol = resolve_tol(tol)
    cap = get_config().enum_cap if cap is None else cap
    if inst.m > cap:
        raise ValueError(f"too many actions for brute force ({inst.m} > {cap})")
    lo, feasible = _interval_tables(inst, tol)
    f = inst.reward.table() * inst.r
    util = np.where(feasible, (1.0 - lo.sum(axis=0)) * f, -np.inf)
    s = select_best(util, np.where(feasible, f, -np.inf), tol)
    alpha = Contract(tuple(float(min(max(x, 0.0), 1.0)) for x in lo[:, s]))
    opt, _ = welfare_opt(inst, tol=tol)
    u = float(util[s])
    return OptimalContractResult(frozenset(members(s)), alpha, u, opt, _gap_ratio(opt, u))


@dataclass(frozen=True)
class CriticalPointList:
    """Upper envelope of ``alpha -> alpha r f(S) - c(S)`` on ``[0, 1]``.

    ``alphas[0] = 0`` and ``sets[0]`` is the best zero-cost set; ``sets[i]``
    is the best response on ``[alphas[i], alphas[i+1]]``.
    """

    alphas: tuple
    sets: tuple
    f_values: tuple
    costs: tuple

    def __len__(self):
        return len(self.alphas)


def _single(inst: Instance, cap: int | None) -> None:
    if inst.n != 1:
        raise ValueError("single-agent instance required")
    cap = get_config().demand_cap if cap is None else cap
    if inst.m > cap:
        raise ValueError(f"too many actions to enumerate ({inst.m} > {cap})")


def single_agent_critical_points(inst: Instance, *, tol: float | None = None,
                                 cap: int | None = None) -> CriticalPointList:
    """Breakpoints of the agent's best response as the contract rises.

    Gift-wrapping over the ``2^m`` lines: from the current set, the next one
    minimises ``(c' - c) / (f' - f)`` over sets with larger ``f``; ties go to
    the largest ``f`` (then lexicographic). Stops once the next breakpoint
    exceeds 1.
    """
    tol = resolve_tol(tol)
    _single(inst, cap)
    F = inst.reward.table() * inst.r
    C = inst.cost_table()
    zero = C <= 0
    s = select_best(np.where(zero, F, -np.inf), F, tol)
    alphas, sets = [0.0], [s]
    while True:
        up = F > F[s] + tol
        if not up.any():
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = np.where(up, (C - C[s]) / (F - F[s]), np.inf)
        a = float(slope.min())
        if a > 1.0 + tol:
            break
        # smallest breakpoint, then largest f, then lex
        nxt = select_best(-slope, np.where(up, F, -np.inf), tol)
        alphas.append(max(a, alphas[-1]))
        sets.append(nxt)
        s = nxt
    return CriticalPointList(
        tuple(alphas),
        tuple(frozenset(members(x)) for x in sets),
        tuple(float(F[x]) for x in sets),
        tuple(float(C[x]) for x in sets),
    )


def single_agent_optimal_exact(inst: Instance, *, tol: float | None = None,
                               cap: int | None = None) -> tuple[float, frozenset, float]:
    """Optimal single-agent contract ``(alpha, S, utility)`` from the envelope.

    Ties in utility prefer the larger ``f`` side, matching
    :func:`brute_force_optimal_contract`.
    """
    tol = resolve_tol(tol)
    cp = single_agent_critical_points(inst, tol=tol, cap=cap)
    utils = np.array([(1.0 - a) * fv for a, fv in zip(cp.alphas, cp.f_values)])
    fv = np.array(cp.f_values)
    near = utils >= utils.max() - tol
    idx = int(np.flatnonzero(near & (fv >= fv[near].max() - tol))[0])
    return float(cp.alphas[idx]), cp.sets[idx], float(utils[idx])


@dataclass(frozen=True)
class GapReport:
    welfare: float
    utility: float
    ratio: float
    holds_m: bool | None
    holds_2m: bool
    tightness: float


def first_best_gap_single(inst: Instance, subadditive: bool | None = None, *,
                          tol: float | None = None) -> GapReport:
    """First-best welfare versus the optimal single-agent contract.

    ``holds_2m`` checks ``utility >= OPT / 2^m`` (any reward);
    ``holds_m`` checks ``utility >= OPT / m`` when the reward is subadditive
    (``None`` when it is not or cannot be decided). ``tightness`` is the
    ratio divided by ``m``; values near 1 mean the ``m`` bound is tight.
    """
    tol = resolve_tol(tol)
    if subadditive is None:
        subadditive = inst.reward.subadditive
        if subadditive is None and inst.m <= 12:
            subadditive = check_subadditive(inst.reward, tol=tol)
    opt, _ = welfare_opt(inst, tol=tol)
    _, _, u = single_agent_optimal_exact(inst, tol=tol)
    m = max(inst.m, 1)
    ratio = _gap_ratio(opt, u)
    holds_m = bool(u >= opt / m - tol) if subadditive else None
    holds_2m = bool(u >= opt / 2 ** inst.m - tol)
    return GapReport(opt, u, ratio, holds_m, holds_2m, ratio / m)


@dataclass(frozen=True)
class AlphaBounds:
    alpha_min: float
    alpha_star: float
    alpha_max: float

    @property
    def holds(self) -> bool:
        return self.alpha_min <= self.alpha_star <= self.alpha_max


def alpha_bounds_single(inst: Instance, *, tol: float | None = None) -> AlphaBounds | None:
    """Bracket around the optimal single-agent contract; None when OPT <= 0.

    ``j*`` is the costliest action of the optimal set. Tolerance is applied
    by widening the bracket by ``tol`` on both sides.
    """
    tol = resolve_tol(tol)
    opt, _ = welfare_opt(inst, tol=tol)
    if opt <= 0:
        return None
    a, s, _ = single_agent_optimal_exact(inst, tol=tol)
    cj = max((inst.costs[j] for j in s), default=0.0)
    m = inst.m
    lo = 1.0 - opt / (cj + opt)
    hi = 1.0 - opt / (m * 2.0 ** m * (cj + opt))
    return AlphaBounds(lo - tol, a, hi + tol)


@dataclass(frozen=True)
class RandomizedGapReport:
    welfare: float
    per_agent: tuple
    weights: tuple
    expected: float
    best_agent: int
    best_utility: float
    holds: bool


def randomized_single_agent_gap(inst: Instance, *, tol: float | None = None,
                                cap: int | None = None) -> RandomizedGapReport:
    """Pick agent ``i`` with probability ``m_i / m`` and use its optimal
    single-agent contract (everyone else idle).

    ``holds`` checks that the expected utility is at least ``OPT / m``.
    """
    from .algorithms import restrict_instance

    tol = resolve_tol(tol)
    cap = get_config().enum_cap if cap is None else cap
    if inst.m > cap:
        raise ValueError(f"too many actions to enumerate ({inst.m} > {cap})")
    opt, _ = welfare_opt(inst, tol=tol)
    per, weights = [], []
    for i in range(inst.n):
        mi = len(inst.agent_actions(i))
        weights.append(mi / inst.m if inst.m else 0.0)
        if mi == 0:
            per.append(0.0)
            continue
        per.append(single_agent_optimal_exact(restrict_instance(inst, [i]), tol=tol)[2])
    expected = math.fsum(w * u for w, u in zip(weights, per))
    best = int(np.argmax(per)) if per else 0
    holds = bool(expected >= opt / max(inst.m, 1) - tol) if opt > 0 else True
    return RandomizedGapReport(opt, tuple(per), tuple(weights), expected, best,
                               per[best] if per else 0.0, holds)


@dataclass(frozen=True)
class EquilibriumGapReport:
    welfare: float
    worst: float
    best: float
    worst_profile: frozenset
    best_profile: frozenset
    count: int
    worst_ratio: float
    best_ratio: float


def worst_equilibrium_gap(inst: Instance, a, *, tol: float | None = None,
                          cap: int | None = None) -> EquilibriumGapReport:
    """Worst and best equilibrium utility of a fixed contract against OPT."""
    a = as_contract(a)
    rep = enumerate_equilibria(inst, a, tol=tol, cap=cap)
    opt, _ = welfare_opt(inst, tol=tol)
    return EquilibriumGapReport(opt, rep.worst, rep.best, rep.worst_profile, rep.best_profile,
                                len(rep), _gap_ratio(opt, rep.worst), _gap_ratio(opt, rep.best))
