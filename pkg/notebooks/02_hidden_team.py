# %% [markdown]
# # A hidden team
#
# Every action belongs to its own agent. A secret team T of size k makes
# the reward grow a little faster once more than half of T is hired. Without finding T,
# a contract can only reach the lower plateau.

# %%
import numpy as np

from teamcontracts.exact import incentive_utility_table
from teamcontracts.instances import hidden_team_instance
from teamcontracts.oracles import (
    brute_force_demand,
    check_gross_substitutes_triplet,
    check_monotone_submodular,
    demand_surplus,
    hidden_team_demand,
)

k, m = 4, 8
inst = hidden_team_instance(k, m, seed=7)
f = inst.reward
print("team:", f.team)
print("submodular:", check_monotone_submodular(f))
print("gross-substitutes witness:", check_gross_substitutes_triplet(f))

# %% [markdown]
# Principal utility at the cheapest contract for every set, split by how many
# team members the set contains.

# %%
g = incentive_utility_table(inst)
team = f._team_mask
overlap = np.array([bin(s & team).count("1") for s in range(1 << m)])
for y in range(k + 1):
    vals = g[overlap == y]
    print(y, round(float(vals[np.isfinite(vals)].max()), 4))
print("g(T) =", round(float(g[team]), 4), "vs 0.78 sqrt(k) =", round(0.78 * k ** 0.5, 4))

# %% [markdown]
# Demand queries can still be answered with a handful of value queries.

# %%
rng = np.random.default_rng(0)
for _ in range(5):
    p = rng.uniform(0, 0.8, size=m)
    before = f.counter.value_queries
    fast = hidden_team_demand(f, p)
    used = f.counter.value_queries - before
    slow = brute_force_demand(f, p)
    print(sorted(fast), used, "queries, surplus gap",
          abs(demand_surplus(f, p, fast) - demand_surplus(f, p, slow)))
