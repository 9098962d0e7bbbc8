"""Minimax-regret bandwidth selection for kernel plug-in treatment rules with binary outcomes."""

__version__ = "0.1.0"

from .bandwidth_opt import (  # noqa: E402
    BandwidthSolution,
    ThetaGridSpec,
    compare_binary_normal,
    optimize_bandwidth,
    plateau_detect,
    table1,
)
from .design_space import ExperimentDesign, make_grid_design, membership_check, worst_case_profiles  # noqa: E402
from .kernels import KernelSpec, decision_statistic, weights  # noqa: E402
from .normal_ref import NormalModelSpec, eta, normal_max_regret, normal_optimal_bandwidth  # noqa: E402
from .regret_exact import exact_acceptance, exact_max_regret_bruteforce, exact_max_regret_reduced  # noqa: E402
from .regret_mc import PGridSpec, acceptance_minus, acceptance_plus, make_draws, max_regret  # noqa: E402

__all__ = [
    "BandwidthSolution",
    "ExperimentDesign",
    "KernelSpec",
    "NormalModelSpec",
    "PGridSpec",
    "ThetaGridSpec",
    "acceptance_minus",
    "acceptance_plus",
    "compare_binary_normal",
    "decision_statistic",
    "eta",
    "exact_acceptance",
    "exact_max_regret_bruteforce",
    "exact_max_regret_reduced",
    "make_draws",
    "make_grid_design",
    "max_regret",
    "membership_check",
    "normal_max_regret",
    "normal_optimal_bandwidth",
    "optimize_bandwidth",
    "plateau_detect",
    "table1",
    "weights",
    "worst_case_profiles",
]
