"""Scalar warm-up problem with a closed-form solution.

Lower level: min_y (y - 2x)^2  s.t.  3x - y <= 0, over y in R, x in [0, 3].
The constraint is active for x > 0, so y*(x) = 3x, mu*(x) = 2x and the value
function is v(x) = x^2 with dv/dx = 2x; the naive partial derivative of g at
the optimum is -4x, which is what the multiplier correction fixes.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..problem import BilevelOracle, LipschitzBounds


def build_pedagogical(upper: str = "zero") -> BilevelOracle:
    """Build the scalar instance.

    ``upper`` selects the upper objective: "zero" for f = 0 or "quadratic"
    for f(x, y) = (y - 3)^2 / 2, whose composite objective (y*(x) = 3x) is
    minimized at x = 1.
    """
    if upper == "zero":
        eval_f = lambda x, y: 0.0
        grad_f_x = lambda x, y: np.zeros(1)
        grad_f_y = lambda x, y: np.zeros(1)
        l_f1 = 0.0
    elif upper == "quadratic":
        eval_f = lambda x, y: 0.5 * (y[0] - 3.0) ** 2
        grad_f_x = lambda x, y: np.zeros(1)
        grad_f_y = lambda x, y: np.array([y[0] - 3.0])
        l_f1 = 1.0
    else:
        raise ConfigError(f"unknown upper objective {upper!r}")

    return BilevelOracle(
        dim_x=1, dim_y=1, num_ineq=1, num_eq=0, alpha_g=2.0,
        eval_f=eval_f, grad_f_x=grad_f_x, grad_f_y=grad_f_y,
        eval_g=lambda x, y: float((y[0] - 2.0 * x[0]) ** 2),
        grad_g_x=lambda x, y: np.array([-4.0 * (y[0] - 2.0 * x[0])]),
        grad_g_y=lambda x, y: np.array([2.0 * (y[0] - 2.0 * x[0])]),
        eval_gc=lambda x, y: np.array([3.0 * x[0] - y[0]]),
        vjp_gc_x=lambda x, y, mu: np.array([3.0 * mu[0]]),
        vjp_gc_y=lambda x, y, mu: np.array([-mu[0]]),
        project_X=lambda v: np.clip(v, 0.0, 3.0),
        project_Y=lambda v: np.asarray(v, dtype=float),
        lipschitz=LipschitzBounds(l_f1=l_f1, l_g1=2.0, l_gc0=1.0, l_gc1=0.0),
        default_steps_g=(0.25, 0.5),
        default_steps_F=(0.2, 0.5),
    )
