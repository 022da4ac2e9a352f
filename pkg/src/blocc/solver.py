"""Outer loop: projected gradient descent on the penalty reformulation.

Each outer iteration solves two inner saddle problems — the lower-level one
(whose multiplier corrects the value-function gradient) and the penalized one
— then assembles the hypergradient estimate and takes a projected step on x.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ConfigError, SolverAbort
from .maxmin import MaxMinConfig, solve_maxmin_F, solve_maxmin_g
from .problem import BilevelOracle, PrimalDualPair, Vector


@dataclass
class BloccConfig:
    gamma: float
    eta: float
    outer_iters: int
    maxmin_g: MaxMinConfig
    maxmin_F: MaxMinConfig
    warm_start: bool = True
    outer_tol: float = 0.0          # stop when |x_{t+1} - x_t| <= outer_tol
    f_update_tol: Optional[float] = None  # stop when |f_t - f_{t-1}| below this
    seed: int = 0

    def __post_init__(self) -> None:
        if self.gamma <= 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.eta <= 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.outer_iters < 0:
            raise ConfigError("outer_iters must be >= 0")
        if self.outer_tol < 0:
            raise ConfigError("outer_tol must be nonnegative")


@dataclass
class IterateTrace:
    iter: int
    x: Vector
    f_at_yF: float
    f_at_yg: float
    g_gap: float          # g(x, y_F) - g(x, y_g), surrogate for g - v
    gen_grad_norm: float  # |x_{t+1} - x_t| / eta
    max_violation: float  # worst positive inequality residual at y_g
    wall_time_s: float


@dataclass
class SolveResult:
    x_final: Vector
    pd_F: PrimalDualPair
    pd_g: PrimalDualPair
    trace: List[IterateTrace]
    avg_sq_gen_grad: float


def estimate_grad_v(oracle: BilevelOracle, x: Vector,
                    pd_g: PrimalDualPair) -> Vector:
    """Value-function gradient estimate: grad_x g + <mu_g, grad_x g^c>.

    The multiplier term is what distinguishes this from the naive (and wrong)
    partial derivative of g alone.
    """
    return oracle.grad_g_x(x, pd_g.y) + oracle.vjp_gc_x(x, pd_g.y, pd_g.mu)


def estimate_grad_F(oracle: BilevelOracle, x: Vector, pd_F: PrimalDualPair,
                    grad_v: Vector, gamma: float) -> Vector:
    """Penalty-objective gradient estimate.

    g_F = grad_x f + gamma*(grad_x g - grad_v) + <mu_F, grad_x g^c>, all
    evaluated at the penalized saddle point (y_F, mu_F).
    """
    if gamma <= 0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    return (oracle.grad_f_x(x, pd_F.y)
            + gamma * (oracle.grad_g_x(x, pd_F.y) - grad_v)
            + oracle.vjp_gc_x(x, pd_F.y, pd_F.mu))


def outer_step(oracle: BilevelOracle, x: Vector, g_F: Vector,
               eta: float) -> Vector:
    """One projected gradient step on the upper variable."""
    if eta <= 0:
        raise ConfigError(f"eta must be positive, got {eta}")
    return oracle.project_X(x - eta * g_F)


def generalized_grad_norm(x_prev: Vector, x_next: Vector, eta: float) -> float:
    """Stationarity metric |x_next - x_prev| / eta for constrained problems."""
    if eta <= 0:
        raise ConfigError(f"eta must be positive, got {eta}")
    return float(np.linalg.norm(np.asarray(x_next) - np.asarray(x_prev)) / eta)


def _max_ineq_violation(oracle: BilevelOracle, x: Vector, y: Vector) -> float:
    gc = oracle.eval_gc(x, y)
    viol = 0.0
    if oracle.num_ineq > 0:
        viol = max(viol, float(np.max(gc[:oracle.num_ineq], initial=0.0)))
    if oracle.num_eq > 0:
        viol = max(viol, float(np.max(np.abs(gc[oracle.num_ineq:]),
                                      initial=0.0)))
    return viol


def solve(oracle: BilevelOracle, config: BloccConfig, x0: Vector,
          init_g: Optional[PrimalDualPair] = None,
          init_F: Optional[PrimalDualPair] = None) -> SolveResult:
    """Run the full bilevel solver from x0.

    The initial primal-dual pairs default to zeros.  With warm_start enabled
    (the default) each outer iteration seeds the inner solves from the
    previous iteration's pairs; otherwise from the provided initial pairs.
    """
    x = oracle.project_X(np.asarray(x0, dtype=float).copy())
    if init_g is None:
        init_g = PrimalDualPair(oracle.project_Y(np.zeros(oracle.dim_y)),
                                np.zeros(oracle.num_constraints))
    if init_F is None:
        init_F = init_g.copy()
    pd_g = init_g.copy()
    pd_F = init_F.copy()

    trace: List[IterateTrace] = []
    t_start = time.perf_counter()
    prev_f: Optional[float] = None

    for t in range(config.outer_iters):
        seed_g = pd_g if config.warm_start else init_g.copy()
        seed_F = pd_F if config.warm_start else init_F.copy()
        try:
            pd_g = solve_maxmin_g(oracle, x, config.maxmin_g, seed_g).pd
            pd_F = solve_maxmin_F(oracle, x, config.gamma, config.maxmin_F,
                                  seed_F).pd
        except SolverAbort as exc:
            raise SolverAbort(f"outer iteration {t}: {exc}") from exc

        g_v = estimate_grad_v(oracle, x, pd_g)
        g_F = estimate_grad_F(oracle, x, pd_F, g_v, config.gamma)
        if not np.all(np.isfinite(g_F)):
            raise SolverAbort(f"outer iteration {t}: non-finite hypergradient")
        x_next = outer_step(oracle, x, g_F, config.eta)

        f_F = float(oracle.eval_f(x, pd_F.y))
        trace.append(IterateTrace(
            iter=t,
            x=x.copy(),
            f_at_yF=f_F,
            f_at_yg=float(oracle.eval_f(x, pd_g.y)),
            g_gap=float(oracle.eval_g(x, pd_F.y) - oracle.eval_g(x, pd_g.y)),
            gen_grad_norm=generalized_grad_norm(x, x_next, config.eta),
            max_violation=_max_ineq_violation(oracle, x, pd_g.y),
            wall_time_s=time.perf_counter() - t_start,
        ))

        step = float(np.linalg.norm(x_next - x))
        x = x_next
        if step <= config.outer_tol:
            break
        if (config.f_update_tol is not None and prev_f is not None
                and abs(f_F - prev_f) < config.f_update_tol):
            break
        prev_f = f_F

    if config.outer_iters > 0 and trace:
        # Re-solve the inner problems at the final x so the returned pairs
        # (and the exit feasibility they imply) describe x_final.
        pd_g = solve_maxmin_g(oracle, x, config.maxmin_g,
                              pd_g if config.warm_start else init_g.copy()).pd
        pd_F = solve_maxmin_F(oracle, x, config.gamma, config.maxmin_F,
                              pd_F if config.warm_start else init_F.copy()).pd

    sq = [r.gen_grad_norm ** 2 for r in trace]
    avg = float(np.mean(sq)) if sq else 0.0
    return SolveResult(x_final=x, pd_F=pd_F, pd_g=pd_g, trace=trace,
                       avg_sq_gen_grad=avg)
