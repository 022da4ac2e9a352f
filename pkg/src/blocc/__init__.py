"""Bilevel optimization with coupled lower-level constraints.

Penalty reformulation of the bilevel problem plus a projected-gradient outer
loop whose inner saddle problems are solved by an accelerated (or single-loop)
primal-dual method.
"""

from .errors import ConfigError, ParseError, SolverAbort
from .problem import (BilevelOracle, LipschitzBounds, PrimalDualPair,
                      lagrangian_F_grads, lagrangian_g_grads)
from .maxmin import (MaxMinConfig, MaxMinMode, MaxMinResult, Stepsizes,
                     clamp_multipliers, default_stepsizes_F,
                     default_stepsizes_g, inner_y_descent,
                     momentum_coefficient, mu_ascent_step, solve_maxmin,
                     solve_maxmin_F, solve_maxmin_g)
from .solver import (BloccConfig, IterateTrace, SolveResult, estimate_grad_F,
                     estimate_grad_v, generalized_grad_norm, outer_step, solve)
from .problems import (NetworkSpec, SvmDataset, build_pedagogical, build_svm,
                       build_toy, build_transport, nine_node_spec,
                       parse_libsvm, parse_network_spec, three_node_spec)
from .verify import (KktReport, active_set_qp, finite_diff_grad,
                     grid_oracle_lower, kkt_residual, penalty_value,
                     quadratic_growth_check)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ParseError", "SolverAbort",
    "BilevelOracle", "LipschitzBounds", "PrimalDualPair",
    "lagrangian_g_grads", "lagrangian_F_grads",
    "MaxMinConfig", "MaxMinMode", "MaxMinResult", "Stepsizes",
    "momentum_coefficient", "inner_y_descent", "mu_ascent_step",
    "clamp_multipliers",
    "solve_maxmin", "solve_maxmin_g", "solve_maxmin_F",
    "default_stepsizes_g", "default_stepsizes_F",
    "BloccConfig", "IterateTrace", "SolveResult",
    "estimate_grad_v", "estimate_grad_F", "outer_step",
    "generalized_grad_norm", "solve",
    "build_pedagogical", "build_toy", "build_svm", "build_transport",
    "SvmDataset", "parse_libsvm", "NetworkSpec", "parse_network_spec",
    "three_node_spec", "nine_node_spec",
    "KktReport", "finite_diff_grad", "grid_oracle_lower", "active_set_qp",
    "kkt_residual", "penalty_value", "quadratic_growth_check",
]
