"""Primal-dual solver for the inner max-min (saddle point) problems.

For a fixed upper-level point x the two inner problems share the form

    max_{mu} min_{y in Y}  L(mu, y)

with L concave (linear) in mu and strongly convex in y.  The solver performs
dual ascent on mu with an optional momentum (Nesterov-style) extrapolation,
and projected gradient descent on y.  Two variants are supported:

* ``Accelerated``: momentum step on mu and a multi-step inner y loop.
* ``SingleLoop``: no momentum, exactly one y step per dual update.  This is
  the right choice when the constraints are affine in y and Y is all of R^n,
  where the dual function is strongly concave and the scheme converges
  linearly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, SolverAbort
from .problem import BilevelOracle, PrimalDualPair, Vector


class MaxMinMode(enum.Enum):
    ACCELERATED = "accelerated"
    SINGLE_LOOP = "single-loop"


@dataclass
class MaxMinConfig:
    mode: MaxMinMode = MaxMinMode.ACCELERATED
    outer_iters: int = 200
    inner_y_iters: int = 10
    eta_y: float = 0.1
    eta_mu: float = 0.1
    tol: float = 0.0  # early stop when max(|y step|, |mu step|) <= tol

    def __post_init__(self) -> None:
        if self.outer_iters < 1:
            raise ConfigError("outer_iters must be >= 1")
        if self.inner_y_iters < 1:
            raise ConfigError("inner_y_iters must be >= 1")
        if self.mode == MaxMinMode.SINGLE_LOOP and self.inner_y_iters != 1:
            raise ConfigError(
                "single-loop mode requires inner_y_iters == 1, got "
                f"{self.inner_y_iters}")
        if self.eta_y <= 0 or self.eta_mu <= 0:
            raise ConfigError("stepsizes eta_y and eta_mu must be positive")
        if self.tol < 0:
            raise ConfigError("tol must be nonnegative")


@dataclass
class MaxMinResult:
    pd: PrimalDualPair
    iterations_used: int
    final_step_norm: float
    # Per-iteration (y, mu) snapshots, recorded only when requested.
    iterates: Optional[List[PrimalDualPair]] = None


def momentum_coefficient(t: int) -> float:
    """Extrapolation weight (t - 1) / (t + 2) of the dual momentum step.

    At t = 0 the value is -0.5, which is harmless because the previous dual
    iterate is initialized equal to the current one, forcing a zero step.
    """
    return (t - 1) / (t + 2)


def inner_y_descent(grad_y: Callable[[Vector, Vector], Vector],
                    project_Y: Callable[[Vector], Vector],
                    y0: Vector, mu: Vector, eta_y: float,
                    steps: int) -> Vector:
    """Run ``steps`` projected-gradient steps on y at fixed multiplier mu."""
    if steps < 1:
        raise ConfigError("inner_y_descent needs steps >= 1")
    y = y0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            g = grad_y(y, mu)
            if not np.all(np.isfinite(g)):
                raise SolverAbort(
                    f"non-finite y-gradient at inner step {k}: y={y!r}")
            y = project_Y(y - eta_y * g)
    return y


def mu_ascent_step(grad_mu: Vector, mu_half: Vector, eta_mu: float,
                   num_ineq: int) -> Vector:
    """Dual ascent step; the inequality block is clamped to be nonnegative,
    the trailing equality block stays free."""
    mu = mu_half + eta_mu * grad_mu
    if num_ineq > 0:
        mu[:num_ineq] = np.maximum(mu[:num_ineq], 0.0)
    return mu


def clamp_multipliers(mu: Vector, num_ineq: int) -> Vector:
    out = np.asarray(mu, dtype=float).copy()
    if num_ineq > 0:
        out[:num_ineq] = np.maximum(out[:num_ineq], 0.0)
    return out


def solve_maxmin(grad_y: Callable[[Vector, Vector], Vector],
                 grad_mu: Callable[[Vector], Vector],
                 project_Y: Callable[[Vector], Vector],
                 num_ineq: int,
                 config: MaxMinConfig,
                 init: PrimalDualPair,
                 record_iterates: bool = False) -> MaxMinResult:
    """Solve max_mu min_y L(mu, y) given the Lagrangian gradient callbacks.

    ``grad_y(y, mu)`` is the y-gradient of L, ``grad_mu(y)`` its mu-gradient
    (the constraint residual, independent of mu).  The inequality block of the
    initial mu is clamped to the nonnegative orthant.
    """
    y = np.asarray(init.y, dtype=float).copy()
    mu = clamp_multipliers(init.mu, num_ineq)
    mu_prev = mu.copy()
    iterates: Optional[List[PrimalDualPair]] = [] if record_iterates else None

    step_norm = np.inf
    t_used = 0
    for t in range(config.outer_iters):
        if config.mode == MaxMinMode.ACCELERATED:
            mu_half = mu + momentum_coefficient(t) * (mu - mu_prev)
        else:
            mu_half = mu

        y_next = inner_y_descent(grad_y, project_Y, y, mu_half,
                                 config.eta_y, config.inner_y_iters)
        if not np.all(np.isfinite(y_next)):
            raise SolverAbort(f"non-finite y iterate at iteration {t}")
        mu_next = mu_ascent_step(grad_mu(y_next), mu_half, config.eta_mu,
                                 num_ineq)
        if not np.all(np.isfinite(mu_next)):
            raise SolverAbort(f"non-finite mu iterate at iteration {t}")

        step_norm = max(float(np.linalg.norm(y_next - y)),
                        float(np.linalg.norm(mu_next - mu)))
        mu_prev = mu
        y, mu = y_next, mu_next
        t_used = t + 1
        if iterates is not None:
            iterates.append(PrimalDualPair(y.copy(), mu.copy()))
        if step_norm <= config.tol:
            break

    return MaxMinResult(pd=PrimalDualPair(y, mu), iterations_used=t_used,
                        final_step_norm=step_norm, iterates=iterates)


def solve_maxmin_g(oracle: BilevelOracle, x: Vector, config: MaxMinConfig,
                   init: PrimalDualPair,
                   record_iterates: bool = False) -> MaxMinResult:
    """Inner solve of the lower-level saddle problem (value function side)."""
    def grad_y(y: Vector, mu: Vector) -> Vector:
        return oracle.grad_g_y(x, y) + oracle.vjp_gc_y(x, y, mu)

    def grad_mu(y: Vector) -> Vector:
        return oracle.eval_gc(x, y)

    return solve_maxmin(grad_y, grad_mu, oracle.project_Y, oracle.num_ineq,
                        config, init, record_iterates)


def solve_maxmin_F(oracle: BilevelOracle, x: Vector, gamma: float,
                   config: MaxMinConfig, init: PrimalDualPair,
                   record_iterates: bool = False) -> MaxMinResult:
    """Inner solve of the penalty saddle problem at penalty constant gamma."""
    if gamma <= 0:
        raise ConfigError(f"gamma must be positive, got {gamma}")

    def grad_y(y: Vector, mu: Vector) -> Vector:
        return (oracle.grad_f_y(x, y) + gamma * oracle.grad_g_y(x, y)
                + oracle.vjp_gc_y(x, y, mu))

    def grad_mu(y: Vector) -> Vector:
        return oracle.eval_gc(x, y)

    return solve_maxmin(grad_y, grad_mu, oracle.project_Y, oracle.num_ineq,
                        config, init, record_iterates)


@dataclass(frozen=True)
class Stepsizes:
    eta_y: float
    eta_mu: float
    from_defaults: bool = False

    def __iter__(self):
        return iter((self.eta_y, self.eta_mu))


def default_stepsizes_g(lips, alpha_g: float, mode: MaxMinMode,
                        defaults: Optional[Tuple[float, float]] = None
                        ) -> Stepsizes:
    """Stepsize rule for the lower-level saddle problem.

    With known smoothness bounds: eta_y = 1 / (l_g1 + l_gc1) and
    eta_mu = alpha_g / l_gc0.  Falls back to the problem-declared defaults
    when bounds are missing or the dual rule degenerates (l_gc0 = 0).
    """
    if lips is not None and lips.l_g1 is not None and lips.l_gc1 is not None:
        eta_y = 1.0 / (lips.l_g1 + lips.l_gc1)
        if lips.l_gc0 is not None and lips.l_gc0 > 0:
            return Stepsizes(eta_y, alpha_g / lips.l_gc0)
        if defaults is not None:
            return Stepsizes(defaults[0], defaults[1], from_defaults=True)
    if defaults is not None:
        return Stepsizes(defaults[0], defaults[1], from_defaults=True)
    raise ConfigError(
        "no Lipschitz bounds and no problem defaults available; "
        "supply eta_y and eta_mu explicitly")


def default_stepsizes_F(lips, alpha_g: float, gamma: float, mode: MaxMinMode,
                        defaults: Optional[Tuple[float, float]] = None
                        ) -> Stepsizes:
    """Stepsize rule for the penalty saddle problem.

    With known bounds: eta_y = 1 / (l_f1 + gamma*l_g1 + l_gc1) and
    eta_mu = (gamma*alpha_g - l_f1) / l_gc0, valid only when
    gamma*alpha_g > l_f1 (otherwise the penalized objective can lose strong
    convexity in y).
    """
    have = (lips is not None and lips.l_f1 is not None
            and lips.l_g1 is not None and lips.l_gc1 is not None)
    if have:
        if gamma * alpha_g <= lips.l_f1:
            raise ConfigError(
                f"gamma*alpha_g = {gamma * alpha_g} must exceed "
                f"l_f1 = {lips.l_f1}; increase gamma")
        eta_y = 1.0 / (lips.l_f1 + gamma * lips.l_g1 + lips.l_gc1)
        if lips.l_gc0 is not None and lips.l_gc0 > 0:
            return Stepsizes(eta_y, (gamma * alpha_g - lips.l_f1) / lips.l_gc0)
        if defaults is not None:
            return Stepsizes(defaults[0], defaults[1], from_defaults=True)
    if defaults is not None:
        return Stepsizes(defaults[0], defaults[1], from_defaults=True)
    raise ConfigError(
        "no Lipschitz bounds and no problem defaults available; "
        "supply eta_y and eta_mu explicitly")
