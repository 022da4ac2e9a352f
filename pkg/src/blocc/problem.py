"""Problem-oracle interface for bilevel programs with coupled lower-level
constraints.

A problem is described by an upper objective f(x, y), a strongly convex lower
objective g(x, y), and a constraint map g^c(x, y) whose rows are split into an
inequality block (g^c <= 0) followed by an equality block (g^c = 0).  Solvers
interact with problems only through :class:`BilevelOracle`, so they stay
agnostic of the application.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import ConfigError

Vector = np.ndarray


@dataclass(frozen=True)
class LipschitzBounds:
    """User-declared smoothness constants used only for default stepsizes.

    Any field may be None when unknown; stepsize helpers then fall back to
    problem-declared defaults.
    """

    l_f1: Optional[float] = None   # Lipschitz constant of grad f
    l_g1: Optional[float] = None   # Lipschitz constant of grad g
    l_gc0: Optional[float] = None  # Lipschitz constant of g^c itself
    l_gc1: Optional[float] = None  # Lipschitz constant of grad g^c


@dataclass(frozen=True)
class BilevelOracle:
    """Callable bundle defining one bilevel problem instance.

    All callables must be pure functions of their arguments (no internal
    state), which makes oracles safe to share across threads.  Gradients are
    analytic; the verify module cross-checks them by finite differences.
    """

    dim_x: int
    dim_y: int
    num_ineq: int
    num_eq: int
    alpha_g: float

    eval_f: Callable[[Vector, Vector], float]
    grad_f_x: Callable[[Vector, Vector], Vector]
    grad_f_y: Callable[[Vector, Vector], Vector]

    eval_g: Callable[[Vector, Vector], float]
    grad_g_x: Callable[[Vector, Vector], Vector]
    grad_g_y: Callable[[Vector, Vector], Vector]

    # Constraint residuals, inequality block first then equality block, and
    # the vector-Jacobian products <mu, d g^c / d x> and <mu, d g^c / d y>.
    eval_gc: Callable[[Vector, Vector], Vector]
    vjp_gc_x: Callable[[Vector, Vector, Vector], Vector]
    vjp_gc_y: Callable[[Vector, Vector, Vector], Vector]

    project_X: Callable[[Vector], Vector]
    project_Y: Callable[[Vector], Vector]

    lipschitz: Optional[LipschitzBounds] = None
    # Problem-declared fallback stepsizes (eta_y, eta_mu) for the two inner
    # saddle problems, used when no Lipschitz bounds are available.
    default_steps_g: Optional[Tuple[float, float]] = None
    default_steps_F: Optional[Tuple[float, float]] = None

    @property
    def num_constraints(self) -> int:
        return self.num_ineq + self.num_eq


@dataclass
class PrimalDualPair:
    """A lower-level point y paired with a multiplier vector mu.

    The first ``num_ineq`` entries of mu belong to inequality rows and must be
    nonnegative whenever produced by a solver; the trailing equality-block
    entries are free.
    """

    y: Vector
    mu: Vector

    def copy(self) -> "PrimalDualPair":
        return PrimalDualPair(self.y.copy(), self.mu.copy())


def _check_dims(oracle: BilevelOracle, x: Vector, pd: PrimalDualPair) -> None:
    if x.shape != (oracle.dim_x,):
        raise ValueError(
            f"x has length {x.shape}, oracle expects ({oracle.dim_x},)")
    if pd.y.shape != (oracle.dim_y,):
        raise ValueError(
            f"y has length {pd.y.shape}, oracle expects ({oracle.dim_y},)")
    if pd.mu.shape != (oracle.num_constraints,):
        raise ValueError(
            f"mu has length {pd.mu.shape}, oracle expects "
            f"({oracle.num_constraints},)")


def lagrangian_g_grads(oracle: BilevelOracle, x: Vector,
                       pd: PrimalDualPair) -> Tuple[Vector, Vector]:
    """Gradients of the lower-level Lagrangian g + <mu, g^c>.

    Returns (grad_y, grad_mu); grad_mu is exactly the constraint residual
    vector g^c(x, y).
    """
    _check_dims(oracle, x, pd)
    grad_y = oracle.grad_g_y(x, pd.y) + oracle.vjp_gc_y(x, pd.y, pd.mu)
    grad_mu = oracle.eval_gc(x, pd.y)
    return grad_y, grad_mu


def lagrangian_F_grads(oracle: BilevelOracle, x: Vector, pd: PrimalDualPair,
                       gamma: float) -> Tuple[Vector, Vector]:
    """Gradients of the penalty Lagrangian f + gamma*g + <mu, g^c> in (y, mu).

    The value-function offset is constant in (y, mu), so it never appears
    here.  Requires gamma > 0.
    """
    if gamma <= 0:
        raise ConfigError(f"penalty constant gamma must be positive, got {gamma}")
    _check_dims(oracle, x, pd)
    grad_y = (oracle.grad_f_y(x, pd.y)
              + gamma * oracle.grad_g_y(x, pd.y)
              + oracle.vjp_gc_y(x, pd.y, pd.mu))
    grad_mu = oracle.eval_gc(x, pd.y)
    return grad_y, grad_mu
