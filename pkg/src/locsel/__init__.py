"""Node-selection optimization toolkit for wireless source-localization networks.

Computes localization error bounds for eavesdropper and jammed-anchor
configurations and solves the eavesdropper-, jammer-, robust and joint
selection problems via convex relaxation, largest-m rounding, swap local
search and exhaustive verification.
"""

from .discrete_select import (CapExceededError, PipelineParams, SelectionOutcome,
                              exhaustive_select, robust_eav_effective,
                              robust_jam_effective, round_largest_m, select_pipeline,
                              swap_search, uncertainty_from_epsilon,
                              uncertainty_from_kappa)
from .eav_metrics import (SPEED_OF_LIGHT, EavFim3, SelectionVector,
                          SingularMetricError, eav_crlb_closed_form, eav_fim_oracle,
                          eav_objective, eav_objective_gradient, lambda_from_signal,
                          pairwise_angle_factor, snr_from_channel)
from .jam_metrics import (JamEfim2, jam_crlb, jam_efim, jam_link_weight,
                          jam_objective, jam_objective_gradient, jam_objective_power,
                          jam_power_gradient)
from .relax_solver import (FeasibleSet, InfeasibleError, RhoInfeasibleError,
                           SolverConvergenceError, SolverOptions, SolverReport,
                           project_capped_simplex, solve_relaxed_eav,
                           solve_relaxed_jam, solve_relaxed_joint, solve_relaxed_power)
from .scenario import (CANDIDATE_REGION, Scenario, ScenarioError,
                       ScenarioValidationError, UncertaintyModel, apply_shadowing,
                       gaussian_like_prior, generate_paper_scenario, load_scenario,
                       load_uncertainty, perturb_anchor_knowledge, save_scenario,
                       save_uncertainty, scenarios_equal)

__version__ = "0.1.0"

__all__ = [
    "CANDIDATE_REGION", "CapExceededError", "EavFim3", "FeasibleSet",
    "InfeasibleError", "JamEfim2", "PipelineParams", "RhoInfeasibleError",
    "SPEED_OF_LIGHT", "Scenario", "ScenarioError", "ScenarioValidationError",
    "SelectionOutcome", "SelectionVector", "SingularMetricError",
    "SolverConvergenceError", "SolverOptions", "SolverReport", "UncertaintyModel",
    "apply_shadowing", "eav_crlb_closed_form", "eav_fim_oracle", "eav_objective",
    "eav_objective_gradient", "exhaustive_select", "gaussian_like_prior",
    "generate_paper_scenario", "jam_crlb", "jam_efim", "jam_link_weight",
    "jam_objective", "jam_objective_gradient", "jam_objective_power",
    "jam_power_gradient", "lambda_from_signal", "load_scenario", "load_uncertainty",
    "pairwise_angle_factor", "perturb_anchor_knowledge", "project_capped_simplex",
    "robust_eav_effective", "robust_jam_effective", "round_largest_m",
    "save_scenario", "save_uncertainty", "scenarios_equal", "select_pipeline",
    "snr_from_channel", "solve_relaxed_eav", "solve_relaxed_jam",
    "solve_relaxed_joint", "solve_relaxed_power", "swap_search",
    "uncertainty_from_epsilon", "uncertainty_from_kappa",
]
