"""Discretized kernel operators, dyadic model operators and the lemma checks."""

from .checks import (
    DominationReport,
    GeometryReport,
    HolderChainReport,
    InvalidConfigError,
    carleson_embedding_ratio,
    choose_d,
    domination_check,
    holder_chain_check,
    necessity_geometry,
)
from .dyadic_ops import apply_M, apply_T, apply_T_sigma, dense_dyadic_matrix, dyadic_kernel
from .kernel import KernelOperator, NearSingularWarning, apply_K, apply_K_sigma, kernel
from .norms import (
    OperatorNormReport,
    WeakTypeReport,
    norm_estimate_L2,
    norm_estimate_L2_direct,
    norm_estimate_Lp_heuristic,
    norm_lower_bound,
    weak_type_check,
)

__all__ = [
    "DominationReport", "GeometryReport", "HolderChainReport", "InvalidConfigError",
    "KernelOperator", "NearSingularWarning", "OperatorNormReport", "WeakTypeReport",
    "apply_K", "apply_K_sigma", "apply_M", "apply_T", "apply_T_sigma",
    "carleson_embedding_ratio", "choose_d", "dense_dyadic_matrix", "domination_check",
    "dyadic_kernel", "holder_chain_check", "kernel", "necessity_geometry",
    "norm_estimate_L2", "norm_estimate_L2_direct", "norm_estimate_Lp_heuristic",
    "norm_lower_bound", "weak_type_check",
]
