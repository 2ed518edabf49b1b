"""Potential function, Nash and subset-stability checks, dynamics, enumeration.

Verification routines read the reward through uncounted evaluations; only the
algorithms in :mod:`teamcontracts.algorithms` are charged for queries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ActionProfile,
    Contract,
    Instance,
    as_contract,
    get_config,
    mask_of,
    members,
    resolve_tol,
    subset_sum_table,
    submasks,
)
from .oracles import RestrictedReward, select_best


@dataclass(frozen=True)
class AlphaInterval:
    """Per-agent closed intervals of contract values that sustain a profile."""

    lo: tuple
    hi: tuple
    feasible: bool

    def contract(self) -> Contract:
        """Componentwise-minimal contract (only meaningful when feasible)."""
        return Contract(tuple(min(max(x, 0.0), 1.0) for x in self.lo))


@dataclass
class EquilibriumReport:
    profiles: list = field(default_factory=list)
    utilities: list = field(default_factory=list)

    @property
    def worst(self) -> float:
        return min(self.utilities) if self.utilities else math.nan

    @property
    def best(self) -> float:
        return max(self.utilities) if self.utilities else math.nan

    @property
    def worst_profile(self) -> frozenset:
        return self.profiles[int(np.argmin(self.utilities))]

    @property
    def best_profile(self) -> frozenset:
        return self.profiles[int(np.argmax(self.utilities))]

    def __contains__(self, s) -> bool:
        return frozenset(s) in self.profiles

    def __len__(self):
        return len(self.profiles)


def _enum_cap(inst: Instance, cap: int | None) -> None:
    cap = get_config().enum_cap if cap is None else cap
    if inst.m > cap:
        raise ValueError(f"too many actions to enumerate ({inst.m} > {cap})")


def _agent_cap(inst: Instance, cap: int | None) -> None:
    cap = get_config().enum_cap if cap is None else cap
    for i in range(inst.n):
        if len(inst.agent_actions(i)) > cap:
            raise ValueError(f"agent {i} has more than {cap} actions")


def allowed_mask(inst: Instance, a) -> int:
    """All actions except costly ones of agents paid nothing (strictly dominated)."""
    a = as_contract(a)
    out = 0
    for j, i in enumerate(inst.owner):
        if a[i] > 0 or inst.costs[j] == 0:
            out |= 1 << j
    return out


def potential(inst: Instance, a, s) -> float:
    """``r f(S) - sum_i c(S_i)/alpha_i`` with ``c/0 = inf`` for positive ``c``."""
    a = as_contract(a)
    mask = mask_of(s)
    total = 0.0
    for j in members(mask):
        c, ai = inst.costs[j], a[inst.owner[j]]
        if c == 0:
            continue
        if ai == 0:
            return -math.inf
        total += c / ai
    return float(inst.reward.evaluate([mask])[0]) * inst.r - total


def potential_table(inst: Instance, a) -> np.ndarray:
    a = as_contract(a)
    scaled = []
    for j, c in enumerate(inst.costs):
        ai = a[inst.owner[j]]
        scaled.append(0.0 if c == 0 else (math.inf if ai == 0 else c / ai))
    return inst.reward.table() * inst.r - subset_sum_table(scaled)


def _deviation_utilities(inst: Instance, a: Contract, mask: int, i: int,
                         allowed: int | None = None):
    mi = inst.agent_mask(i)
    if allowed is not None:
        mi &= allowed
    rest = mask & ~inst.agent_mask(i)
    subs = np.fromiter(submasks(mi), dtype=np.int64)
    f = inst.reward.evaluate(subs | rest)
    cost = inst.cost_table()[subs] if inst.m <= 20 else np.array([inst.cost(int(x)) for x in subs])
    return subs, a[i] * f * inst.r - cost, f


def best_response(inst: Instance, a, s, i: int, *, cap: int | None = None,
                  tol: float | None = None) -> frozenset:
    """Agent ``i``'s best response to ``S_{-i}``; ties favour larger f, then lex.

    Enumerates ``A_i`` when small; otherwise asks a demand query on
    ``f(. | S_{-i})`` restricted to ``A_i`` at prices ``c_j / (alpha_i r)``.
    """
    a = as_contract(a)
    tol = resolve_tol(tol)
    cap = get_config().enum_cap if cap is None else cap
    mask = mask_of(s)
    acts = inst.agent_actions(i)
    if len(acts) <= cap:
        subs, util, f = _deviation_utilities(inst, a, mask, i)
        return frozenset(members(select_best(util, f, tol, masks=subs)))
    local = RestrictedReward(inst.reward, acts, base=mask & ~inst.agent_mask(i))
    if a[i] == 0:
        prices = [0.0 if inst.costs[j] == 0 else math.inf for j in acts]
    else:
        prices = [inst.costs[j] / (a[i] * inst.r) for j in acts]
    picked = local.demand(prices)
    return frozenset(acts[p] for p in picked)


def is_nash(inst: Instance, a, s, *, tol: float | None = None,
            cap: int | None = None) -> bool:
    a = as_contract(a)
    tol = resolve_tol(tol)
    _agent_cap(inst, cap)
    mask = mask_of(s)
    for i in range(inst.n):
        subs, util, _ = _deviation_utilities(inst, a, mask, i)
        current = util[subs == (mask & inst.agent_mask(i))][0]
        if current < util.max() - tol:
            return False
    return True


def is_subset_stable(inst: Instance, a, s, *, tol: float | None = None,
                     cap: int | None = None) -> bool:
    """No agent gains by dropping any subset of its own chosen actions."""
    a = as_contract(a)
    tol = resolve_tol(tol)
    _agent_cap(inst, cap)
    mask = mask_of(s)
    for i in range(inst.n):
        own = mask & inst.agent_mask(i)
        subs, util, _ = _deviation_utilities(inst, a, mask, i)
        current = util[subs == own][0]
        inside = (subs & own) == subs
        if current < util[inside].max() - tol:
            return False
    return True


def nash_flags(inst: Instance, a, *, tol: float | None = None, subset_only: bool = False,
               cap: int | None = None) -> np.ndarray:
    """Boolean table over all profiles: Nash (or subset stable) under ``a``."""
    a = as_contract(a)
    tol = resolve_tol(tol)
    _enum_cap(inst, cap)
    f = inst.reward.table() * inst.r
    c = inst.cost_table()
    masks = np.arange(1 << inst.m, dtype=np.int64)
    ok = np.ones(masks.size, dtype=bool)
    for i in range(inst.n):
        mi = inst.agent_mask(i)
        rest = masks & ~mi
        own = masks & mi
        current = a[i] * f - c[own]
        best = np.full(masks.size, -np.inf)
        for sub in submasks(mi):
            dev = a[i] * f[rest | sub] - c[sub]
            if subset_only:
                dev = np.where((own & sub) == sub, dev, -np.inf)
            np.maximum(best, dev, out=best)
        ok &= current >= best - tol
    return ok


def best_response_dynamics(inst: Instance, a, start=(), *, seed: int | None = None,
                           tol: float | None = None, max_steps: int | None = None) -> ActionProfile:
    """Round-robin strict best-response improvements until no agent can gain.

    Costly actions of agents with ``alpha_i = 0`` are pruned first. Every
    improving step strictly raises the potential, so the loop terminates;
    ``max_steps`` (default ``n * 2^m``) is only a safety net.
    """
    a = as_contract(a)
    tol = resolve_tol(tol)
    allowed = allowed_mask(inst, a)
    mask = mask_of(start) & allowed
    order = list(range(inst.n))
    if seed is not None:
        order = [int(i) for i in np.random.default_rng(seed).permutation(inst.n)]
    budget = max_steps if max_steps is not None else inst.n * (1 << min(inst.m, 40))
    steps = 0
    while True:
        improved = False
        for i in order:
            subs, util, f = _deviation_utilities(inst, a, mask, i, allowed)
            current = util[subs == (mask & inst.agent_mask(i))][0]
            if util.max() > current + tol:
                br = select_best(util, f, tol, masks=subs)
                mask = (mask & ~inst.agent_mask(i)) | br
                steps += 1
                improved = True
                if steps > budget:
                    raise RuntimeError("best-response dynamics exceeded its step budget")
        if not improved:
            return ActionProfile.from_mask(mask)


def demand_prices(inst: Instance, a) -> np.ndarray:
    """Prices ``c_j / (alpha_i r)``; pruned actions get an infinite price."""
    a = as_contract(a)
    p = np.empty(inst.m)
    for j, c in enumerate(inst.costs):
        ai = a[inst.owner[j]]
        if c == 0:
            p[j] = 0.0
        elif ai == 0:
            p[j] = math.inf
        else:
            p[j] = c / (ai * inst.r)
    return p


def equilibrium_via_demand(inst: Instance, a, demand=None) -> ActionProfile:
    """One demand query at prices ``c_j/alpha_i`` returns a potential maximiser."""
    prices = demand_prices(inst, a)
    chosen = demand(inst.reward, prices) if demand is not None else inst.reward.demand(prices)
    return ActionProfile(frozenset(chosen))


def enumerate_equilibria(inst: Instance, a, *, tol: float | None = None,
                         cap: int | None = None) -> EquilibriumReport:
    a = as_contract(a)
    flags = nash_flags(inst, a, tol=tol, cap=cap)
    f = inst.reward.table()
    scale = (1.0 - a.total) * inst.r
    report = EquilibriumReport()
    for s in np.flatnonzero(flags):
        report.profiles.append(frozenset(members(int(s))))
        report.utilities.append(float(scale * f[s]) if s else 0.0)
    return report


def feasible_alpha_intervals(inst: Instance, s, *, tol: float | None = None,
                             cap: int | None = None) -> AlphaInterval:
    """Per-agent interval of ``alpha_i`` making ``S_i`` a best response to ``S_{-i}``.

    Each deviation ``S_i'`` gives ``alpha_i r (f(S) - f(S_i', S_{-i})) >= c(S_i) - c(S_i')``:
    a positive coefficient is a lower bound, a negative one an upper bound,
    and a zero coefficient with positive right side is infeasible.
    """
    tol = resolve_tol(tol)
    _agent_cap(inst, cap)
    mask = mask_of(s)
    fs = float(inst.reward.evaluate([mask])[0]) * inst.r
    lo, hi = [], []
    feasible = True
    for i in range(inst.n):
        mi = inst.agent_mask(i)
        own = mask & mi
        rest = mask & ~mi
        subs = np.fromiter(submasks(mi), dtype=np.int64)
        coef = fs - inst.reward.evaluate(subs | rest) * inst.r
        rhs = inst.cost(own) - np.array([inst.cost(int(x)) for x in subs])
        pos = coef > tol
        neg = coef < -tol
        zero = ~(pos | neg)
        l = max(0.0, float((rhs[pos] / coef[pos]).max())) if pos.any() else 0.0
        h = min(1.0, float((rhs[neg] / coef[neg]).min())) if neg.any() else 1.0
        if (rhs[zero] > tol).any() or l > h + tol:
            feasible = False
        lo.append(l)
        hi.append(h)
    return AlphaInterval(tuple(lo), tuple(hi), feasible)


def subset_stability_lower_bounds(inst: Instance, s, *, tol: float | None = None):
    """Smallest ``alpha_i`` per agent making ``S`` subset stable, or None if impossible.

    Subset deviations only give lower bounds because ``f`` is monotone.
    """
    tol = resolve_tol(tol)
    mask = mask_of(s)
    fs = float(inst.reward.evaluate([mask])[0]) * inst.r
    out = []
    for i in range(inst.n):
        own = mask & inst.agent_mask(i)
        rest = mask & ~inst.agent_mask(i)
        bound = 0.0
        for sub in submasks(own):
            b = inst.cost(own) - inst.cost(sub)
            coef = fs - float(inst.reward.evaluate([sub | rest])[0]) * inst.r
            if coef > tol:
                bound = max(bound, b / coef)
            elif b > tol:
                return None
        out.append(bound)
    return tuple(out)


def check_doubling(inst: Instance, a, s, eps: float, *, tol: float | None = None,
                   cap: int | None = None) -> bool:
    """Every equilibrium of ``2 alpha + eps`` keeps at least half of ``f(S)``.

    ``S`` must be subset stable under ``alpha`` and ``f`` submodular.
    """
    a = as_contract(a)
    tol = resolve_tol(tol)
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not is_subset_stable(inst, a, s, tol=tol):
        raise ValueError("profile is not subset stable under the given contract")
    doubled = Contract(tuple(2 * x + eps for x in a.alpha))
    fs = float(inst.reward.evaluate([mask_of(s)])[0])
    if fs == 0:
        return True
    flags = nash_flags(inst, doubled, tol=tol, cap=cap)
    f = inst.reward.table()
    return bool((f[flags] >= 0.5 * fs - tol).all())
