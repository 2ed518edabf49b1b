"""Linear contracts for teams of agents with combinatorial actions."""
from .core import (
    ActionProfile,
    Contract,
    Instance,
    NumericConfig,
    agent_utility,
    get_config,
    principal_utility,
    validate_instance,
    welfare,
)
from .oracles import (
    AdditiveReward,
    CappedReward,
    CoverageReward,
    HiddenTeamReward,
    QueryCounter,
    RestrictedReward,
    RewardOracle,
    TableReward,
    UniformReward,
    XOSReward,
    brute_force_demand,
    capped,
    check_gross_substitutes_triplet,
    check_monotone,
    check_monotone_submodular,
    check_subadditive,
    hidden_team_demand,
)
from .equilibrium import (
    AlphaInterval,
    EquilibriumReport,
    best_response,
    best_response_dynamics,
    check_doubling,
    enumerate_equilibria,
    equilibrium_via_demand,
    feasible_alpha_intervals,
    is_nash,
    is_subset_stable,
    potential,
)
from .algorithms import (
    AlgParams,
    GuaranteedContract,
    alg1_bundle_demand_single,
    alg2_bundle_demand_multi,
    alg3_no_large_agent,
    alg4_fptas_single,
    alg5_robust_single,
    alg6_meta,
    restrict_instance,
    verify_guarantee,
)
from .exact import (
    CriticalPointList,
    OptimalContractResult,
    brute_force_optimal_contract,
    first_best_gap_single,
    min_contract_for,
    randomized_single_agent_gap,
    single_agent_critical_points,
    single_agent_optimal_exact,
    welfare_opt,
    worst_equilibrium_gap,
)
from .instances import (
    GeneratorSpec,
    example_one,
    hidden_team_instance,
    max_singleton_gap_instance,
    prop_b1_instance,
    random_coverage_instance,
    random_monotone_table_instance,
    uniform_additive_instance,
    xos_bad_equilibrium_instance,
)

__version__ = "0.1.0"
