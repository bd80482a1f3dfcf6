"""Mixed-autonomy traffic assignment equilibria.

Routes a unit demand over the paths of a single origin-destination network
shared by two vehicle classes: selfish human drivers, who equalize the travel
times they experience, and altruistic autonomous vehicles, which equalize
marginal social costs. The package solves the resulting two-class equilibrium,
provides independent exact and grid oracles for validation, and runs
instance-level checks for when a growing autonomous share helps, hurts, or
leaves the social cost unchanged.
"""

from __future__ import annotations

from mixeq.analysis import (
    AnalysisVerdict,
    CentralizedComparison,
    DeteriorationReport,
    HypothesisChecks,
    ImprovementCertificate,
    NoEffectReport,
    analyze,
    check_improvement,
    check_no_effect,
    compare_centralized,
    construct_baseline_from_mixed,
    deterioration_report,
)
from mixeq.costs import (
    ClassCosts,
    CostParams,
    beckmann_human,
    class_link_costs,
    cost_arrays,
    marginal_cost,
    path_costs,
    social_cost,
    travel_time,
)
from mixeq.errors import (
    DegenerateSystem,
    DimensionMismatch,
    EmptySupport,
    GridBudgetExceeded,
    InfeasibleFlow,
    MixeqError,
    NoPathExists,
    NoValidSupport,
    NotPathMultigraph,
    PathBudgetExceeded,
    RequiresLinearCosts,
    RequiresSingleExponent,
    SchemaError,
    SingularMv,
    UnknownLink,
)
from mixeq.kernels import BACKEND
from mixeq.netio import load_network, network_to_doc, parse_network, save_network
from mixeq.netmodel import (
    Bundle,
    IncidenceMatrix,
    Link,
    Network,
    PathSet,
    columns_independent,
    declared_path_set,
    enumerate_paths,
    incidence_matrix,
    is_path_multigraph,
    series_bundles,
)
from mixeq.oracle import (
    ExactEquilibrium,
    GridOracleResult,
    SupportPair,
    exact_baseline,
    exact_mixed,
    grid_gap_oracle,
)
from mixeq.solver import (
    EquilibriumResult,
    FlowPattern,
    SolverConfig,
    UniquenessReport,
    all_or_nothing,
    frank_wolfe_auto,
    frank_wolfe_human,
    multi_start_uniqueness_check,
    solve_mixed,
    vi_gap,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BACKEND",
    # network model
    "Bundle",
    "CostParams",
    "ClassCosts",
    "IncidenceMatrix",
    "Link",
    "Network",
    "PathSet",
    "columns_independent",
    "declared_path_set",
    "enumerate_paths",
    "incidence_matrix",
    "is_path_multigraph",
    "series_bundles",
    # costs
    "beckmann_human",
    "class_link_costs",
    "cost_arrays",
    "marginal_cost",
    "path_costs",
    "social_cost",
    "travel_time",
    # solver
    "EquilibriumResult",
    "FlowPattern",
    "SolverConfig",
    "UniquenessReport",
    "all_or_nothing",
    "frank_wolfe_auto",
    "frank_wolfe_human",
    "multi_start_uniqueness_check",
    "solve_mixed",
    "vi_gap",
    # oracles
    "ExactEquilibrium",
    "GridOracleResult",
    "SupportPair",
    "exact_baseline",
    "exact_mixed",
    "grid_gap_oracle",
    # analysis
    "AnalysisVerdict",
    "CentralizedComparison",
    "DeteriorationReport",
    "HypothesisChecks",
    "ImprovementCertificate",
    "NoEffectReport",
    "analyze",
    "check_improvement",
    "check_no_effect",
    "compare_centralized",
    "construct_baseline_from_mixed",
    "deterioration_report",
    # io
    "load_network",
    "network_to_doc",
    "parse_network",
    "save_network",
    # errors
    "MixeqError",
    "SchemaError",
    "NoPathExists",
    "PathBudgetExceeded",
    "UnknownLink",
    "EmptySupport",
    "DimensionMismatch",
    "InfeasibleFlow",
    "NoValidSupport",
    "DegenerateSystem",
    "GridBudgetExceeded",
    "NotPathMultigraph",
    "RequiresLinearCosts",
    "RequiresSingleExponent",
    "SingularMv",
]
