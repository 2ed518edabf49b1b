# %% [markdown]
# # Two agents, three actions
#
# Agent 0 owns actions 0 and 1, agent 1 owns action 2. The reward is
# submodular, yet lowering one agent's effort can make the other do less.
# We find the best contract by brute force and then look at every
# equilibrium it sustains.

# %%
from teamcontracts import example_one
from teamcontracts.equilibrium import enumerate_equilibria, feasible_alpha_intervals
from teamcontracts.exact import brute_force_optimal_contract, min_contract_for

inst = example_one(eps=0.01)
print(inst)

# %% [markdown]
# Cheapest contract sustaining each profile, and what the principal keeps.

# %%
for s in [{0}, {1}, {0, 1}, {2}, {0, 2}, {1, 2}, {0, 1, 2}]:
    contract, u = min_contract_for(inst, s)
    alpha = None if contract is None else tuple(round(x, 4) for x in contract.alpha)
    print(f"{sorted(s)!s:10} alpha={alpha}  principal={u:.4f}")

# %% [markdown]
# Profile {0, 2} sits on a knife edge: agent 0 needs exactly 0.32.

# %%
print(feasible_alpha_intervals(inst, {0, 2}))

# %%
best = brute_force_optimal_contract(inst)
print(best)

# %% [markdown]
# The optimal contract also has worse equilibria. The principal cannot rely
# on agents picking the good one.

# %%
rep = enumerate_equilibria(inst, best.contract)
for s, u in zip(rep.profiles, rep.utilities):
    print(sorted(s), round(u, 4))
