"""Certified entanglement measures, hypothesis tests, and channel demos.

Every quantitative routine returns a Bracket: a [lower, upper] enclosure
whose two sides come from independent routes (a convex relaxation and an
explicit feasible certificate). Nothing here reports a bare point estimate.
"""

from .bracket import Bracket
from .tensor import (MultiState, as_state, copies_state, kron_all,
                     partial_trace, partial_transpose, permute_systems,
                     relative_entropy, trace_norm, von_neumann_entropy)
from .states import (SeparableDecomposition, computational_product_decomposition,
                     isotropic, isotropic_boundary_decomposition,
                     isotropic_fidelity, isotropic_separable_decomposition,
                     isotropic_zero_decomposition, is_twirl_invariant,
                     max_entangled, max_entangled_op, random_separable,
                     random_state, twirl_project, werner)
from .sep import (approximate_decomposition, is_ppt, max_product_overlap,
                  nearest_sep_distance, ppt_exact, ppt_linear_bound,
                  product_minimize, separable_ball_radius)
from .measures import (RegularizationTrace, global_robustness, log_robustness,
                       mixing_robustness, regularized_estimate,
                       rel_ent_entanglement, smoothed_log_robustness)
from .hypotest import (build_candidate_pool, fsep, fsep_bounded, fsep_relaxed,
                       sfne_eval, stein_curve, stein_functional)
from .protocols import (CptpReport, MeasurePrepareMap, MonotonicityReport,
                        ReversibilityReport, SeppCertificate,
                        build_distill_map, build_formation_map,
                        check_er_monotonicity, check_lr_monotonicity,
                        choi_matrix, compose, find_mixing_state,
                        reversibility_demo, sepp_composition_bound, twirl,
                        verify_cptp, verify_sepp)

__version__ = "0.1.0"

__all__ = [
    "Bracket", "MultiState", "SeparableDecomposition", "RegularizationTrace",
    "MeasurePrepareMap", "CptpReport", "SeppCertificate", "MonotonicityReport",
    "ReversibilityReport",
    "as_state", "copies_state", "kron_all", "partial_trace",
    "partial_transpose", "permute_systems", "relative_entropy", "trace_norm",
    "von_neumann_entropy",
    "computational_product_decomposition", "isotropic",
    "isotropic_boundary_decomposition", "isotropic_fidelity",
    "isotropic_separable_decomposition", "isotropic_zero_decomposition",
    "is_twirl_invariant", "max_entangled", "max_entangled_op",
    "random_separable", "random_state", "twirl_project", "werner",
    "approximate_decomposition", "is_ppt", "max_product_overlap",
    "nearest_sep_distance", "ppt_exact", "ppt_linear_bound",
    "product_minimize", "separable_ball_radius",
    "global_robustness", "log_robustness", "mixing_robustness",
    "regularized_estimate", "rel_ent_entanglement", "smoothed_log_robustness",
    "build_candidate_pool", "fsep", "fsep_bounded", "fsep_relaxed",
    "sfne_eval", "stein_curve", "stein_functional",
    "build_distill_map", "build_formation_map", "check_er_monotonicity",
    "check_lr_monotonicity", "choi_matrix", "compose", "find_mixing_state",
    "reversibility_demo", "sepp_composition_bound", "twirl", "verify_cptp",
    "verify_sepp",
]
