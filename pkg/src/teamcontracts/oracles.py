"""Value/demand oracles, reward families and set-function property checks."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .core import (
    get_config,
    lex_key,
    mask_of,
    members,
    popcount_table,
    resolve_tol,
    subset_sum_table,
)

# full tables are cached for value lookups up to this ground-set size
LOOKUP_CAP = 16


class QueryCounter:
    """Value/demand query counts. Thread-safe; only ``reset`` lowers them."""

    def __init__(self):
        self._lock = threading.Lock()
        self.value_queries = 0
        self.demand_queries = 0

    def add_value(self, k: int = 1) -> None:
        with self._lock:
            self.value_queries += k

    def add_demand(self, k: int = 1) -> None:
        with self._lock:
            self.demand_queries += k

    def reset(self) -> None:
        with self._lock:
            self.value_queries = 0
            self.demand_queries = 0

    @property
    def total(self) -> int:
        return self.value_queries + self.demand_queries

    def snapshot(self) -> dict:
        return {"value_queries": self.value_queries, "demand_queries": self.demand_queries}

    def __repr__(self):
        return f"QueryCounter(value={self.value_queries}, demand={self.demand_queries})"


class RewardOracle:
    """Set function on ``m`` actions with counted value and demand queries.

    Subclasses implement ``_eval_mask`` (scalar) and may override
    ``_build_table`` with a vectorised version. ``table()`` and ``evaluate()``
    are uncounted; they back the exhaustive reference routines.
    """

    kind = "abstract"
    # every shipped family is subadditive (monotone submodular or XOS)
    subadditive = True

    def __init__(self, m: int):
        if m < 0:
            raise ValueError("ground set size must be nonnegative")
        self.m = int(m)
        self.counter = QueryCounter()
        self._table = None

    # -- counted interface
    def value(self, s) -> float:
        return self.value_mask(mask_of(s))

    def value_mask(self, mask: int) -> float:
        mask = int(mask)
        if mask < 0 or mask >> self.m:
            raise IndexError(f"action id out of range (m={self.m})")
        self.counter.add_value()
        return self._query(mask)

    def demand(self, prices) -> frozenset:
        return brute_force_demand(self, prices)

    # -- uncounted
    def _query(self, mask: int) -> float:
        if self._table is not None or self.m <= LOOKUP_CAP:
            return float(self.table()[mask])
        return float(self._eval_mask(mask))

    def _eval_mask(self, mask: int) -> float:
        raise NotImplementedError

    def _build_table(self) -> np.ndarray:
        return np.array([self._eval_mask(s) for s in range(1 << self.m)], dtype=float)

    def table(self) -> np.ndarray:
        if self._table is None:
            t = np.asarray(self._build_table(), dtype=float)
            t.setflags(write=False)
            self._table = t
        return self._table

    def evaluate(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        if self._table is not None or self.m <= LOOKUP_CAP:
            return self.table()[masks]
        return np.array([self._eval_mask(int(s)) for s in masks], dtype=float)

    def __repr__(self):
        return f"{type(self).__name__}(m={self.m})"


def _key_mask(key) -> int:
    if isinstance(key, str):
        return mask_of(int(t) for t in key.split(",") if t.strip())
    return mask_of(key)


class TableReward(RewardOracle):
    """Explicit values for all 2^m subsets, indexed by bitmask."""

    kind = "table"
    subadditive = None  # unknown; check_subadditive decides

    def __init__(self, values, m: int | None = None, tol: float | None = None,
                 validate: bool = True):
        if isinstance(values, dict):
            keyed = {_key_mask(k): float(v) for k, v in values.items()}
            if m is None:
                m = max((max(members(k)) + 1 for k in keyed if k), default=0)
            arr = np.full(1 << m, np.nan)
            for key, v in keyed.items():
                if key >> m:
                    raise ValueError("table key outside the ground set")
                arr[key] = v
        else:
            arr = np.asarray(values, dtype=float)
            m = int(round(math.log2(len(arr)))) if len(arr) else 0
        if len(arr) != 1 << m or np.isnan(arr).any():
            raise ValueError("table must list a value for every subset")
        super().__init__(m)
        self._values = arr
        if validate:
            tol = resolve_tol(tol)
            if abs(arr[0]) > tol:
                raise ValueError("table reward is not normalized (f(empty) != 0)")
            if not check_monotone(self, tol=tol):
                raise ValueError("table reward is not monotone")

    def _eval_mask(self, mask):
        return self._values[mask]

    def _build_table(self):
        return self._values.copy()


class AdditiveReward(RewardOracle):
    """``f(S) = sum_{j in S} v_j``."""

    kind = "additive"

    def __init__(self, values: Sequence[float]):
        v = np.asarray(values, dtype=float)
        if (v < 0).any():
            raise ValueError("additive values must be nonnegative")
        super().__init__(len(v))
        self.values = v

    def _eval_mask(self, mask):
        return math.fsum(self.values[j] for j in members(mask))

    def _build_table(self):
        return subset_sum_table(self.values)


class UniformReward(AdditiveReward):
    """Additive reward with the same value (default ``1/m``) on every action."""

    kind = "uniform"

    def __init__(self, m: int, value: float | None = None):
        self.unit = 1.0 / m if value is None else float(value)
        super().__init__([self.unit] * m)


class CoverageReward(RewardOracle):
    """Weighted coverage: ``f(S) = w(union of covers[j], j in S) / scale``.

    ``scale`` defaults to the total universe weight, so ``f(A) <= 1``.
    """

    kind = "coverage"

    def __init__(self, weights: Sequence[float], covers: Sequence[Sequence[int]],
                 scale: float | None = None):
        w = np.asarray(weights, dtype=float)
        if (w < 0).any():
            raise ValueError("coverage weights must be nonnegative")
        super().__init__(len(covers))
        self.weights = w
        self.covers = tuple(tuple(sorted(int(e) for e in c)) for c in covers)
        for c in self.covers:
            if any(e < 0 or e >= len(w) for e in c):
                raise ValueError("covered element outside the universe")
        total = float(w.sum())
        self.scale = float(scale) if scale is not None else (total if total > 0 else 1.0)
        self._cover_masks = [mask_of(c) for c in self.covers]

    @classmethod
    def random(cls, m: int, universe: int, rng, density: float = 0.35) -> "CoverageReward":
        weights = rng.uniform(0.1, 1.0, size=universe)
        covers = []
        for _ in range(m):
            row = np.flatnonzero(rng.random(universe) < density)
            if row.size == 0:
                row = np.array([rng.integers(universe)])
            covers.append(row.tolist())
        return cls(np.round(weights, 6), covers)

    def _eval_mask(self, mask):
        covered = 0
        for j in members(mask):
            covered |= self._cover_masks[j]
        return math.fsum(self.weights[e] for e in members(covered)) / self.scale

    def _build_table(self):
        u = len(self.weights)
        cov = np.zeros((1, u), dtype=bool)
        for c in self.covers:
            row = np.zeros(u, dtype=bool)
            row[list(c)] = True
            cov = np.concatenate([cov, cov | row])
        return cov.astype(float) @ self.weights / self.scale


class XOSReward(RewardOracle):
    """Maximum over additive clauses: ``f(S) = max_l sum_{j in S} a[l, j]``."""

    kind = "xos"
    subadditive = True

    def __init__(self, clauses):
        a = np.atleast_2d(np.asarray(clauses, dtype=float))
        if (a < 0).any():
            raise ValueError("XOS clause weights must be nonnegative")
        super().__init__(a.shape[1])
        self.clauses = a

    def _eval_mask(self, mask):
        idx = list(members(mask))
        if not idx:
            return 0.0
        return float(self.clauses[:, idx].sum(axis=1).max())

    def _build_table(self):
        return np.max([subset_sum_table(row) for row in self.clauses], axis=0)


def hidden_team_value(x, y, k):
    """Piecewise ``f(x, y)`` for x actions outside and y inside the team.

    Vectorised over ``x`` and ``y``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    half = k / 2.0
    root_k = math.sqrt(k)
    inner = np.sqrt(x + half)
    third = inner + (y - half) / (root_k + inner)
    out = np.where(x + y >= k, root_k,
                   np.where(y <= half, np.sqrt(np.minimum(x + y, k)), third))
    return out if out.ndim else float(out)


class HiddenTeamReward(RewardOracle):
    """``f_T(S) = f(|S \\ T|, |S & T|)`` with parameter ``k = |T|``.

    Monotone and submodular for even ``k``; not gross substitutes.
    """

    kind = "hidden_team"

    def __init__(self, m: int, team):
        team = tuple(sorted(int(j) for j in team))
        k = len(team)
        if k % 2 or not 4 <= k < m:
            raise ValueError("hidden team needs even size k with 4 <= k < m")
        if team[0] < 0 or team[-1] >= m:
            raise ValueError("team member outside the ground set")
        super().__init__(m)
        self.team = team
        self.k = k
        self._team_mask = mask_of(team)

    def _eval_mask(self, mask):
        y = bin(mask & self._team_mask).count("1")
        x = bin(mask & ~self._team_mask).count("1")
        return hidden_team_value(x, y, self.k)

    def _build_table(self):
        pc = popcount_table(self.m)
        masks = np.arange(1 << self.m)
        y = pc[masks & self._team_mask]
        x = pc[masks & ~self._team_mask]
        return hidden_team_value(x, y, self.k)

    def demand(self, prices) -> frozenset:
        p = np.asarray(prices, dtype=float)
        if (p >= 0).all():
            return hidden_team_demand(self, p)
        return brute_force_demand(self, p)


class CappedReward(RewardOracle):
    """``min(inner(S), xi)``; one inner value query per outer query."""

    kind = "capped"

    def __init__(self, inner: RewardOracle, xi: float):
        if not xi >= 0:
            raise ValueError("cap must be nonnegative")
        super().__init__(inner.m)
        self.inner = inner
        self.xi = float(xi)
        self.subadditive = inner.subadditive

    def _query(self, mask):
        return min(self.inner.value_mask(mask), self.xi)

    def _eval_mask(self, mask):
        return min(self.inner._query(mask), self.xi)

    def _build_table(self):
        return np.minimum(self.inner.table(), self.xi)


def capped(oracle: RewardOracle, xi: float) -> CappedReward:
    return CappedReward(oracle, xi)


def _expand(local_mask: int, actions: Sequence[int]) -> int:
    out = 0
    for pos in members(local_mask):
        out |= 1 << actions[pos]
    return out


class RestrictedReward(RewardOracle):
    """Inner reward seen through a subset of actions, others fixed to ``base``.

    Local action ``p`` is global action ``actions[p]``. With ``marginal=True``
    the value is ``inner(S | base) - inner(base)`` (two inner queries).
    """

    kind = "restricted"

    def __init__(self, inner: RewardOracle, actions: Sequence[int], base: int = 0,
                 marginal: bool = False):
        super().__init__(len(actions))
        self.inner = inner
        self.actions = tuple(int(j) for j in actions)
        self.base = int(base)
        self.marginal = marginal
        self.subadditive = inner.subadditive

    def _query(self, mask):
        v = self.inner.value_mask(_expand(mask, self.actions) | self.base)
        if self.marginal:
            v -= self.inner.value_mask(self.base)
        return v

    def _eval_mask(self, mask):
        v = self.inner._query(_expand(mask, self.actions) | self.base)
        if self.marginal:
            v -= self.inner._query(self.base)
        return v

    def _build_table(self):
        glob = np.zeros(1, dtype=np.int64)
        for j in self.actions:
            glob = np.concatenate([glob, glob | (1 << j)])
        glob |= self.base
        vals = self.inner.evaluate(glob)
        if self.marginal:
            vals = vals - self.inner.evaluate(np.array([self.base]))[0]
        return vals


# --------------------------------------------------------------------------
# demand


def select_best(score: np.ndarray, fvals: np.ndarray, tol: float,
                tie_break: str | None = None, masks: np.ndarray | None = None) -> int:
    """Index (mask) of the maximiser of ``score`` under the tie-break policy.

    Candidates within ``tol`` of the maximum are kept; ``larger_f_then_lex``
    then keeps those with the largest ``fvals`` and picks the lexicographically
    smallest set.
    """
    tie_break = tie_break or get_config().tie_break
    best = np.max(score)
    cand = np.flatnonzero(score >= best - tol)
    if tie_break == "larger_f_then_lex" and cand.size > 1:
        fc = fvals[cand]
        cand = cand[fc >= fc.max() - tol]
    labels = cand if masks is None else masks[cand]
    return min((int(s) for s in labels), key=lex_key)


def brute_force_demand(oracle: RewardOracle, prices, *, cap: int | None = None,
                       tol: float | None = None, tie_break: str | None = None) -> frozenset:
    """Exact demand set ``argmax_S f(S) - sum_{j in S} p_j`` by enumeration."""
    cfg = get_config()
    cap = cfg.demand_cap if cap is None else cap
    tol = resolve_tol(tol)
    p = np.asarray(prices, dtype=float)
    if p.shape != (oracle.m,):
        raise ValueError(f"expected {oracle.m} prices, got shape {p.shape}")
    if oracle.m > cap:
        raise ValueError(f"ground set too large for brute-force demand ({oracle.m} > {cap})")
    oracle.counter.add_demand()
    f = oracle.table()
    score = f - subset_sum_table(p)
    return frozenset(members(select_best(score, f, tol, tie_break)))


def demand_surplus(oracle: RewardOracle, prices, s) -> float:
    """Uncounted ``f(S) - p(S)``."""
    mask = mask_of(s)
    p = np.asarray(prices, dtype=float)
    return float(oracle.evaluate([mask])[0] - math.fsum(p[j] for j in members(mask)))


def hidden_team_demand(oracle: RewardOracle, prices, tol: float | None = None) -> frozenset:
    """Demand set for a hidden-team reward using value queries only.

    The team ``T`` is never read from the oracle; its size is learned from
    ``f(A)`` and, when a price-sorted prefix reveals more than ``k/2`` team
    members, ``T`` is reconstructed from O(m) further value queries. Prices
    must be nonnegative.
    """
    tol = resolve_tol(tol)
    p = np.asarray(prices, dtype=float)
    m = oracle.m
    if p.shape != (m,):
        raise ValueError(f"expected {m} prices, got shape {p.shape}")
    if (p < 0).any():
        raise ValueError("hidden-team demand needs nonnegative prices")
    order = sorted(range(m), key=lambda j: (p[j], j))
    oracle.counter.add_demand()

    full = oracle.value_mask((1 << m) - 1)
    k = int(round(full * full))
    if k % 2 or not 4 <= k < m or abs(math.sqrt(k) - full) > 1e-6:
        raise ValueError(f"malformed hidden-team reward (f(A) = {full})")

    prefix = [0]
    for j in order:
        prefix.append(prefix[-1] | (1 << j))

    prefix_vals = [0.0]
    i_star = None
    for i in range(1, k + 1):
        v = oracle.value_mask(prefix[i])
        prefix_vals.append(v)
        if abs(v - math.sqrt(i)) > tol:
            i_star = i
            break

    def price(mask):
        return math.fsum(p[j] for j in members(mask))

    if i_star is None:
        cands = prefix[: k + 1]
        score = np.array([prefix_vals[i] - price(s) for i, s in enumerate(cands)])
        best = select_best(score, np.array(prefix_vals), tol, masks=np.array(cands))
        return frozenset(members(best))

    # the i*-th cheapest action is a team member
    ref = prefix_vals[i_star]
    in_team = {order[i_star - 1]: True}
    before = prefix[i_star - 1]
    for j in order[i_star:]:
        in_team[j] = abs(oracle.value_mask(before | (1 << j)) - ref) <= tol
    j_star = order[i_star]
    for j in order[:i_star - 1]:
        same = abs(oracle.value_mask((prefix[i_star] | (1 << j_star)) & ~(1 << j)) - ref) <= tol
        in_team[j] = in_team[j_star] if same else not in_team[j_star]

    inside = [j for j in order if in_team[j]]
    outside = [j for j in order if not in_team[j]]
    masks, vals, score = [], [], []
    for x in range(min(k, len(outside)) + 1):
        for y in range(min(k - x, len(inside)) + 1):
            s = mask_of(outside[:x]) | mask_of(inside[:y])
            v = hidden_team_value(x, y, k)
            masks.append(s)
            vals.append(v)
            score.append(v - price(s))
    best = select_best(np.array(score), np.array(vals), tol, masks=np.array(masks))
    return frozenset(members(best))


# --------------------------------------------------------------------------
# property checks


def _masks_avoiding(m: int, bits: int) -> np.ndarray:
    masks = np.arange(1 << m, dtype=np.int64)
    return masks[(masks & bits) == 0]


def _check_cap(oracle: RewardOracle, cap: int | None) -> None:
    cap = get_config().check_cap if cap is None else cap
    if oracle.m > cap:
        raise ValueError(f"ground set too large for exhaustive check ({oracle.m} > {cap})")


def check_monotone(oracle: RewardOracle, tol: float | None = None,
                   cap: int | None = None) -> bool:
    tol = resolve_tol(tol)
    _check_cap(oracle, cap if cap is not None else max(get_config().check_cap, LOOKUP_CAP))
    f = oracle.table()
    for j in range(oracle.m):
        s = _masks_avoiding(oracle.m, 1 << j)
        if (f[s | (1 << j)] - f[s] < -tol).any():
            return False
    return True


def check_monotone_submodular(oracle: RewardOracle, m: int | None = None,
                              tol: float | None = None, cap: int | None = None) -> bool:
    """Exhaustive check of monotonicity and decreasing marginals.

    Uses the local form ``f(j|S) >= f(j|S+i)`` which is equivalent to
    ``f(j|S) >= f(j|S')`` for all ``S <= S'``.
    """
    tol = resolve_tol(tol)
    if m is not None and m != oracle.m:
        raise ValueError("m does not match the oracle's ground set")
    _check_cap(oracle, cap)
    if not check_monotone(oracle, tol=tol, cap=oracle.m):
        return False
    f = oracle.table()
    n = oracle.m
    for i in range(n):
        for j in range(i + 1, n):
            bi, bj = 1 << i, 1 << j
            s = _masks_avoiding(n, bi | bj)
            lhs = f[s | bj] - f[s]
            rhs = f[s | bi | bj] - f[s | bi]
            if (lhs < rhs - tol).any():
                return False
    return True


def check_subadditive(oracle: RewardOracle, tol: float | None = None,
                      cap: int = 12) -> bool:
    tol = resolve_tol(tol)
    _check_cap(oracle, cap)
    f = oracle.table()
    masks = np.arange(1 << oracle.m)
    for s in range(1 << oracle.m):
        if (f[s] + f < f[s | masks] - tol).any():
            return False
    return True


class TripletWitness(NamedTuple):
    base: frozenset
    i: int
    j: int
    k: int
    lhs: float
    rhs: float


def check_gross_substitutes_triplet(oracle: RewardOracle, m: int | None = None,
                                    tol: float | None = None, cap: int | None = None):
    """Triplet condition for gross substitutes on a submodular function.

    Returns ``True`` when every set ``S`` and distinct ``i, j, k`` outside it
    satisfy ``max(g(ik|S)+g(j|S), g(jk|S)+g(i|S)) >= g(ij|S)+g(k|S)``;
    otherwise the first violating :class:`TripletWitness`.
    """
    tol = resolve_tol(tol)
    if m is not None and m != oracle.m:
        raise ValueError("m does not match the oracle's ground set")
    _check_cap(oracle, cap)
    f = oracle.table()
    n = oracle.m
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                s = _masks_avoiding(n, (1 << a) | (1 << b) | (1 << c))
                base = f[s]
                single = {x: f[s | (1 << x)] - base for x in (a, b, c)}
                pair = {}
                for x, y in ((a, b), (a, c), (b, c)):
                    pair[frozenset((x, y))] = f[s | (1 << x) | (1 << y)] - base
                for i, j, k in ((a, b, c), (a, c, b), (b, c, a)):
                    lhs = np.maximum(pair[frozenset((i, k))] + single[j],
                                     pair[frozenset((j, k))] + single[i])
                    rhs = pair[frozenset((i, j))] + single[k]
                    bad = np.flatnonzero(lhs < rhs - tol)
                    if bad.size:
                        t = bad[0]
                        return TripletWitness(frozenset(members(int(s[t]))), i, j, k,
                                              float(lhs[t]), float(rhs[t]))
    return True


DemandFn = Callable[[RewardOracle, np.ndarray], frozenset]
