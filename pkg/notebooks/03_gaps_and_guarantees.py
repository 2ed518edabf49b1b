# %% [markdown]
# # How much do contracts lose?
#
# First the gap between the best welfare and the best single-agent contract,
# then the certified guarantee of the combined algorithm on random teams.

# %%
import numpy as np

from teamcontracts.algorithms import alg6_meta, verify_guarantee
from teamcontracts.exact import (
    brute_force_optimal_contract,
    first_best_gap_single,
    single_agent_critical_points,
)
from teamcontracts.instances import (
    expected_max_singleton_gap,
    max_singleton_gap_instance,
    random_coverage_instance,
    uniform_additive_instance,
)

# %% [markdown]
# With f(S) the largest single value in S, every breakpoint pays the
# principal the same, so the gap grows linearly in m.

# %%
for m in (2, 4, 6, 8):
    inst = max_singleton_gap_instance(m, delta=0.5)
    gap = first_best_gap_single(inst)
    print(m, round(gap.ratio, 4), expected_max_singleton_gap(m, 0.5))
print(single_agent_critical_points(max_singleton_gap_instance(4)).alphas)

# %% [markdown]
# Uniform additive rewards with four agents: the best contract keeps 0.125
# out of a welfare of 0.5.

# %%
print(brute_force_optimal_contract(uniform_additive_instance(4)))

# %% [markdown]
# Random coverage teams, cost scales from tiny to moderate. For each we compare the certified
# bound, the worst equilibrium it induces and the exact optimum.

# %%
rows = []
for seed in range(20):
    rng = np.random.default_rng(seed)
    inst = random_coverage_instance(3, 2, 8, seed, cost_range=(0.0, 10 ** rng.uniform(-6, -1)))
    gc = alg6_meta(inst)
    holds, worst = verify_guarantee(inst, gc)
    opt = brute_force_optimal_contract(inst).utility
    rows.append((seed, gc.provenance, gc.lam, worst, opt, holds))
for r in rows:
    print(f"{r[0]:3d} {r[1]:22s} lam={r[2]:.4f} worst={r[3]:.4f} opt={r[4]:.4f} ok={r[5]}")
