"""Approximation algorithms that return contracts with certified guarantees.

* :func:`alg1_bundle_demand_single` and :func:`alg2_bundle_demand_multi`
  approximately maximise ``h(S) - sum_i sqrt(q(S_i))`` (bundle prices).
* :func:`alg3_no_large_agent` turns them into a contract whose equilibria keep
  a constant fraction of the value when no single agent dominates.
* :func:`alg4_fptas_single` is the single-agent FPTAS over a geometric grid of
  contracts; :func:`alg5_robust_single` makes the best single-agent contract
  robust to the other agents, and :func:`alg6_meta` returns the better of the
  two certified contracts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .core import Contract, Instance, mask_of, members, resolve_tol
from .equilibrium import enumerate_equilibria, is_subset_stable
from .oracles import RestrictedReward, RewardOracle, capped


@dataclass(frozen=True)
class AlgParams:
    """Parameters shared by the contract algorithms.

    Attributes
    ----------
    rho : float
        Approximation parameter of the bundle-price subroutine. Guarantees are
        certified for ``1/6`` only.
    eps : float or None
        Perturbation added to the doubled contract; must lie in ``(0, 1/(4n))``.
        ``None`` means ``1/(8n)``.
    fptas_eps : float
        Accuracy of the single-agent FPTAS.
    """

    rho: float = 1.0 / 6.0
    eps: float | None = None
    fptas_eps: float = 0.5

    def __post_init__(self):
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0, 1]")
        if self.eps is not None and not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0 < self.fptas_eps < 1:
            raise ValueError("fptas_eps must lie in (0, 1)")

    def eps_for(self, n: int) -> float:
        eps = 1.0 / (8 * n) if self.eps is None else self.eps
        if not 0 < eps < 1.0 / (4 * n):
            raise ValueError(f"eps must lie in (0, 1/(4n)) = (0, {1.0 / (4 * n)})")
        return eps


@dataclass
class GuaranteedContract:
    """A contract and a lower bound ``lam`` on the principal's utility in
    every equilibrium of it.

    ``details`` carries algorithm internals (working set, pre-doubling
    contract, selected agent, query counts) for inspection and tests.
    """

    contract: Contract
    lam: float
    provenance: str
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("guarantee must be nonnegative")


def _log2_ceil(m: int) -> int:
    return math.ceil(math.log2(m)) if m > 1 else 0


def _queries(oracle: RewardOracle) -> tuple[int, int]:
    return oracle.counter.value_queries, oracle.counter.demand_queries


# --------------------------------------------------------------------------
# bundle-price demand


def alg1_bundle_demand_single(q: Sequence[float], h: RewardOracle,
                              rho: float = 1.0 / 6.0) -> frozenset:
    """Approximate maximiser of ``h(S) - sqrt(q(S))`` for one agent.

    For every action ``j`` with ``h(j) > 0`` and every scale ``k`` the greedy
    demand at additive prices ``18 q / (2^k h(j))`` is a candidate; the best
    candidate under the bundle objective is returned. The empty set is always
    a candidate, so the returned objective is nonnegative.

    Parameters
    ----------
    q : sequence of float
        Nonnegative weights, one per action of ``h``.
    h : RewardOracle
        Monotone, submodular, normalized set function (value queries only).
    rho : float
        Kept for the interface; the guarantee
        ``h(S) - sqrt(q(S)) >= max_T (rho h(T) - sqrt(q(T)))`` is proven for
        ``rho = 1/6`` and does not change the procedure.
    """
    q = np.asarray(q, dtype=float)
    m = h.m
    if q.shape != (m,):
        raise ValueError(f"expected {m} weights, got shape {q.shape}")
    if (q < 0).any():
        raise ValueError("weights must be nonnegative")
    singles = [h.value_mask(1 << j) for j in range(m)]
    best_mask, best_obj = 0, 0.0
    for j in range(m):
        if not singles[j] > 0:
            continue
        for k in range(1, max(1, _log2_ceil(m)) + 1):
            x = (2 ** k) * singles[j]
            prices = 18.0 * q / x
            s, hs = 0, 0.0
            while True:
                pick, pick_score, pick_val = None, -math.inf, 0.0
                for jj in range(m):
                    if s >> jj & 1:
                        continue
                    val = h.value_mask(s | (1 << jj))
                    score = val - hs - prices[jj]
                    if score > pick_score:
                        pick, pick_score, pick_val = jj, score, val
                if pick is None or pick_score < 0:
                    break
                s |= 1 << pick
                hs = pick_val
            obj = hs - math.sqrt(math.fsum(q[jj] for jj in members(s)))
            if obj > best_obj:
                best_mask, best_obj = s, obj
    return frozenset(members(best_mask))


def alg2_bundle_demand_multi(groups: Sequence[Sequence[int]], q: Sequence[float],
                             h: RewardOracle, rho: float = 1.0 / 6.0) -> frozenset:
    """Approximate maximiser of ``h(S) - sum_i sqrt(q(S_i))`` over a partition.

    Runs ``n`` rounds; in each round every agent proposes a set by
    :func:`alg1_bundle_demand_single` on its marginal function over what has
    been selected so far (weights multiplied by 4), and the best proposal is
    added. The union of the accepted proposals satisfies the guarantee with
    ``rho / 2``.

    ``groups[i]`` lists the action ids of agent ``i`` in ``h``'s ground set.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (h.m,):
        raise ValueError(f"expected {h.m} weights, got shape {q.shape}")
    q4 = 4.0 * q
    groups = [tuple(int(j) for j in g) for g in groups]
    union = 0
    for _ in range(len(groups)):
        best_score, best_add = -math.inf, 0
        for acts in groups:
            if not acts:
                continue
            marginal = RestrictedReward(h, acts, base=union, marginal=True)
            local = alg1_bundle_demand_single(q4[list(acts)], marginal, rho)
            lmask = mask_of(local)
            gain = marginal.value_mask(lmask) if lmask else 0.0
            score = gain - math.sqrt(math.fsum(q4[acts[p]] for p in local))
            if score > best_score:
                best_score = score
                best_add = mask_of(acts[p] for p in local)
        union |= best_add
    return frozenset(members(union))


def _bundle_price(inst: Instance, gamma: float, mask: int, i: int) -> float:
    return gamma * math.sqrt(inst.cost(mask & inst.agent_mask(i)))


def _prune(inst: Instance, fhat: RewardOracle, gamma: float, mask: int) -> int:
    """Drop actions whose marginal is strictly below their bundle-price drop.

    The smallest violating action id goes first; marginals are recomputed
    after every removal.
    """
    while True:
        fs = fhat.value_mask(mask)
        removed = False
        for j in members(mask):
            i = inst.owner[j]
            without = mask & ~(1 << j)
            marg = fs - fhat.value_mask(without)
            drop = _bundle_price(inst, gamma, mask, i) - _bundle_price(inst, gamma, without, i)
            if marg < drop:
                mask = without
                removed = True
                break
        if not removed:
            return mask


def alg3_no_large_agent(inst: Instance, params: AlgParams | None = None, *,
                        verify_internals: bool = True, tol: float | None = None
                        ) -> GuaranteedContract:
    """Contract with a guarantee for submodular rewards when no agent is large.

    For every action ``j*`` with ``f(j*) > 0`` and ``t = 0..ceil(log2 m)``:
    cap the reward at ``xi = rho^2/512 f(j*) 2^t``, find a set by
    :func:`alg2_bundle_demand_multi` with weights ``gamma^2 c`` where
    ``gamma = sqrt(32 xi)``, prune it, and price it with
    ``alpha_i = (4/gamma) sqrt(c(S_i))``. The set of largest ``f`` wins; its
    contract is doubled and bumped by ``eps`` and ``lam = f(S)/8``.

    With ``verify_internals`` the two structural facts behind the guarantee
    (pre-doubling contract sums to at most 1/4, working set subset stable) are
    checked. If either fails, which can only happen for non-submodular
    rewards, the result degrades to the contract ``eps`` with ``lam = 0``.
    """
    params = params or AlgParams()
    tol = resolve_tol(tol)
    n, m, f = inst.n, inst.m, inst.reward
    eps = params.eps_for(n)
    v0, d0 = _queries(f)
    groups = [inst.agent_actions(i) for i in range(n)]
    costs = np.asarray(inst.costs)

    best = None  # (f value, gamma, mask, alpha)
    for j_star in range(m):
        fj = f.value_mask(1 << j_star)
        if not fj > 0:
            continue
        for t in range(_log2_ceil(m) + 1):
            xi = params.rho ** 2 / 512.0 * fj * 2 ** t
            gamma = math.sqrt(32.0 * xi)
            fhat = capped(f, xi)
            s = mask_of(alg2_bundle_demand_multi(groups, gamma ** 2 * costs, fhat, params.rho))
            s = _prune(inst, fhat, gamma, s)
            alpha = tuple(4.0 / gamma * math.sqrt(inst.cost(s & inst.agent_mask(i)))
                          for i in range(n))
            fs = f.value_mask(s)
            if best is None or fs > best[0]:
                best = (fs, gamma, s, alpha)

    v1, d1 = _queries(f)
    details = {"value_queries": v1 - v0, "demand_queries": d1 - d0, "eps": eps}
    if best is None:
        return GuaranteedContract(Contract.zeros(n), 0.0, "alg3:zero-reward", details)

    fs, gamma, s, alpha = best
    details.update(gamma=gamma, working_set=frozenset(members(s)),
                   internal_alpha=alpha, internal_sum=math.fsum(alpha))
    ok = details["internal_sum"] <= 0.25 + tol
    if ok and verify_internals:
        ok = is_subset_stable(inst, Contract(tuple(min(x, 1.0) for x in alpha)), s, tol=tol)
    if not ok:
        details["certified"] = False
        return GuaranteedContract(Contract((eps,) * n), 0.0, "alg3:uncertified", details)
    details["certified"] = True
    doubled = Contract(tuple(2 * x + eps for x in alpha))
    return GuaranteedContract(doubled, fs * inst.r / 8.0, "alg3", details)


# --------------------------------------------------------------------------
# single-agent FPTAS and the robust single-agent contract


class FptasResult(NamedTuple):
    alpha: float
    s: frozenset
    utility: float
    value_queries: int
    demand_queries: int

    @property
    def queries(self) -> int:
        return self.value_queries + self.demand_queries


def fptas_grid_size(m: int, eps: float, subadditive: bool = False) -> int:
    """Largest grid index ``K``; the grid is ``k = 0..K`` per costly action."""
    span = m * m if subadditive else m * 2.0 ** m
    if span <= 1:
        return 0
    return math.ceil(math.log(span) / math.log(1.0 / (1.0 - eps)))


def alg4_fptas_single(inst: Instance, eps: float = 0.5, *, subadditive: bool = False
                      ) -> FptasResult:
    """(1 - eps)-approximate optimal contract for a single agent.

    Uses one demand query at prices ``c`` for the first-best welfare ``OPT``,
    then for every costly action ``j`` tries the contracts
    ``1 - (1-eps)^(k+1) OPT/(c_j + OPT)`` and keeps the best
    ``(1-alpha) f(S)`` where ``S`` is the demand at prices ``c/alpha``.
    ``subadditive=True`` shortens the grid (bound ``m^2`` instead of
    ``m 2^m`` on the first-best gap).
    """
    if inst.n != 1:
        raise ValueError("the FPTAS needs a single-agent instance")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    f, r = inst.reward, inst.r
    costs = np.asarray(inst.costs, dtype=float)
    v0, d0 = _queries(f)

    def done(alpha, s, util):
        v1, d1 = _queries(f)
        return FptasResult(float(alpha), frozenset(members(s)), float(util), v1 - v0, d1 - d0)

    s = inst.zero_cost_mask()
    alpha = 0.0
    util = f.value_mask(s) * r if s else 0.0
    welfare_set = mask_of(f.demand(costs / r))
    opt = (f.value_mask(welfare_set) * r if welfare_set else 0.0) - inst.cost(welfare_set)
    if opt <= 0:
        return done(0.0, s, util)

    top = fptas_grid_size(inst.m, eps, subadditive)
    for j in range(inst.m):
        if costs[j] <= 0:
            continue
        for k in range(top + 1):
            a = 1.0 - (1.0 - eps) ** (k + 1) * opt / (costs[j] + opt)
            sk = mask_of(f.demand(costs / (a * r)))
            uk = (1.0 - a) * f.value_mask(sk) * r if sk else 0.0
            if uk > util:
                alpha, s, util = a, sk, uk
    return done(alpha, s, util)


def restrict_instance(inst: Instance, agents: Sequence[int]) -> Instance:
    """Sub-instance of the given agents; everyone else plays nothing.

    Actions are renumbered in increasing global order; the reward is a
    :class:`RestrictedReward` whose ``actions`` attribute maps back.
    """
    agents = [int(i) for i in agents]
    for i in agents:
        inst.agent_mask(i)
    acts = sorted(j for i in agents for j in inst.agent_actions(i))
    pos = {i: p for p, i in enumerate(agents)}
    return Instance(
        n=len(agents),
        owner=tuple(pos[inst.owner[j]] for j in acts),
        costs=tuple(inst.costs[j] for j in acts),
        reward=RestrictedReward(inst.reward, acts),
        r=inst.r,
    )


def alg5_robust_single(inst: Instance, params: AlgParams | None = None) -> GuaranteedContract:
    """Robust version of the best single-agent contract.

    The FPTAS (``eps = 1/2`` by default) runs on every agent's restriction.
    If the zero-cost actions are already worth more than a third of the best
    single-agent utility, everyone gets ``1/(2n)`` and ``lam = f(A0)/4``;
    otherwise the best agent gets ``(1 + alpha')/2`` and
    ``lam = (1 - alpha') f(S')/6``.
    """
    params = params or AlgParams()
    n = inst.n
    runs = []
    for i in range(n):
        sub = restrict_instance(inst, [i])
        res = alg4_fptas_single(sub, params.fptas_eps)
        runs.append((res, sub.reward.actions))
    # the restriction leaves other agents idle, so its utility is the global one
    scores = [res.utility for res, _ in runs]
    i = int(np.argmax(scores))
    res, acts = runs[i]
    bench = scores[i]
    zero = inst.zero_cost_mask()
    f_zero = inst.reward.value_mask(zero) * inst.r if zero else 0.0
    details = {
        "agent": i,
        "single_alpha": res.alpha,
        "single_set": frozenset(acts[p] for p in res.s),
        "single_utility": bench,
        "zero_cost_value": f_zero,
        "value_queries": sum(r_.value_queries for r_, _ in runs),
        "demand_queries": sum(r_.demand_queries for r_, _ in runs),
    }
    if f_zero > bench / 3.0:
        e = 1.0 / (2 * n)
        return GuaranteedContract(Contract((e,) * n), f_zero / 4.0, "alg5:zero-cost", details)
    alpha = [0.0] * n
    alpha[i] = (1.0 + res.alpha) / 2.0
    return GuaranteedContract(Contract(tuple(alpha)), bench / 6.0, "alg5:single-agent", details)


def alg6_meta(inst: Instance, params: AlgParams | None = None) -> GuaranteedContract:
    """Better (by guarantee) of :func:`alg3_no_large_agent` and :func:`alg5_robust_single`.

    The first is run with ``eps = 1/(8n)`` and ``rho = 1/6``; ties go to it.
    """
    params = params or AlgParams()
    multi = alg3_no_large_agent(inst, AlgParams(rho=1.0 / 6.0, eps=1.0 / (8 * inst.n),
                                                fptas_eps=params.fptas_eps))
    single = alg5_robust_single(inst, params)
    out = multi if multi.lam >= single.lam else single
    details = {"candidates": {"alg3": multi.lam, "alg5": single.lam},
               "alg3": multi.details, "alg5": single.details,
               "value_queries": multi.details["value_queries"] + single.details["value_queries"],
               "demand_queries": multi.details["demand_queries"] + single.details["demand_queries"]}
    return GuaranteedContract(out.contract, out.lam, "alg6/" + out.provenance, details)


def verify_guarantee(inst: Instance, gc: GuaranteedContract, *, tol: float | None = None,
                     cap: int | None = None) -> tuple[bool, float]:
    """Enumerate all equilibria of ``gc.contract``; return (holds, worst utility)."""
    tol = resolve_tol(tol)
    report = enumerate_equilibria(inst, gc.contract, tol=tol, cap=cap)
    worst = report.worst
    if math.isnan(worst):
        return True, worst
    return bool(worst >= gc.lam - tol), worst
