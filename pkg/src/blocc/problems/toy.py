"""One-dimensional nonconvex test problem.

Upper objective f(x, y) = exp(-y + 2) / (2 + cos(6x)) + ln((4x - 2)^2 + 1)/2,
lower objective g(x, y) = (y - 2x)^2 with the coupling constraint y - x <= 0
and x in [0, 3].  For x >= 0 the constraint binds and y*(x) = x, so the
bilevel problem reduces to minimizing f(x, x), which has several local minima
in [0, 3].
"""

from __future__ import annotations

import numpy as np

from ..problem import BilevelOracle, LipschitzBounds


def toy_phi(x: float) -> float:
    """Reduced objective f(x, x), the 1-D function the solver should descend."""
    return (np.exp(-x + 2.0) / (2.0 + np.cos(6.0 * x))
            + 0.5 * np.log((4.0 * x - 2.0) ** 2 + 1.0))


def build_toy() -> BilevelOracle:
    def eval_f(x, y):
        return float(np.exp(-y[0] + 2.0) / (2.0 + np.cos(6.0 * x[0]))
                     + 0.5 * np.log((4.0 * x[0] - 2.0) ** 2 + 1.0))

    def grad_f_x(x, y):
        d = 2.0 + np.cos(6.0 * x[0])
        term1 = 6.0 * np.exp(-y[0] + 2.0) * np.sin(6.0 * x[0]) / d ** 2
        u = 4.0 * x[0] - 2.0
        term2 = 4.0 * u / (u ** 2 + 1.0)
        return np.array([term1 + term2])

    def grad_f_y(x, y):
        return np.array([-np.exp(-y[0] + 2.0) / (2.0 + np.cos(6.0 * x[0]))])

    return BilevelOracle(
        dim_x=1, dim_y=1, num_ineq=1, num_eq=0, alpha_g=2.0,
        eval_f=eval_f, grad_f_x=grad_f_x, grad_f_y=grad_f_y,
        eval_g=lambda x, y: float((y[0] - 2.0 * x[0]) ** 2),
        grad_g_x=lambda x, y: np.array([-4.0 * (y[0] - 2.0 * x[0])]),
        grad_g_y=lambda x, y: np.array([2.0 * (y[0] - 2.0 * x[0])]),
        eval_gc=lambda x, y: np.array([y[0] - x[0]]),
        vjp_gc_x=lambda x, y, mu: np.array([-mu[0]]),
        vjp_gc_y=lambda x, y, mu: np.array([mu[0]]),
        project_X=lambda v: np.clip(v, 0.0, 3.0),
        project_Y=lambda v: np.asarray(v, dtype=float),
        # grad_f_y has no global Lipschitz constant (exponential in y), so
        # only the g-side constants are declared and the F-side relies on the
        # fallback stepsizes below.
        lipschitz=LipschitzBounds(l_f1=None, l_g1=2.0, l_gc0=1.0, l_gc1=0.0),
        default_steps_g=(0.25, 0.5),
        default_steps_F=(0.05, 0.5),
    )
