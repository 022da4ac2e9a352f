"""Independent numerical audits for the main solvers.

Nothing here shares code with the solver path: gradients are checked by
central finite differences, lower-level solutions by brute-force grid search
(for one- and two-dimensional lower levels), and affine-constrained quadratic
lower levels by exact active-set enumeration.  These oracles are intentionally
slow and simple.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, SolverAbort
from .maxmin import MaxMinConfig, solve_maxmin_F
from .problem import BilevelOracle, PrimalDualPair, Vector


@dataclass
class KktReport:
    stationarity_norm: float
    max_primal_violation: float
    max_complementarity: float
    dual_feasibility: float  # most negative inequality multiplier, as >= 0


def finite_diff_grad(fn: Callable[[Vector], float], point: Vector,
                     h: Optional[float] = None) -> Vector:
    """Central finite differences, per-coordinate step 1e-6*max(1, |p_i|)
    unless ``h`` overrides it."""
    p = np.asarray(point, dtype=float)
    grad = np.zeros_like(p)
    for i in range(p.size):
        hi = h if h is not None else 1e-6 * max(1.0, abs(p[i]))
        ei = np.zeros_like(p)
        ei[i] = hi
        fp = fn(p + ei)
        fm = fn(p - ei)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise SolverAbort(f"non-finite evaluation at coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * hi)
    return grad


def grid_oracle_lower(oracle: BilevelOracle, x: Vector,
                      bounds: Sequence[Tuple[float, float]],
                      resolution: int = 400,
                      refine_tol: float = 1e-8) -> Tuple[Vector, float]:
    """Brute-force value function: min of g over feasible grid points inside
    ``bounds``, refined by iterative grid shrinking to ``refine_tol``.

    Only for dim_y <= 2.  Feasibility means inequality residuals <= 0 and
    equality residuals within a grid-spacing tolerance.
    """
    if oracle.dim_y > 2:
        raise ConfigError("grid oracle only supports dim_y <= 2")
    if len(bounds) != oracle.dim_y:
        raise ConfigError("one (lo, hi) bound pair per y coordinate required")

    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)

    def feasible(y, slack):
        y = oracle.project_Y(y)
        gc = oracle.eval_gc(x, y)
        ok = True
        if oracle.num_ineq > 0:
            ok &= bool(np.all(gc[:oracle.num_ineq] <= slack))
        if oracle.num_eq > 0:
            ok &= bool(np.all(np.abs(gc[oracle.num_ineq:]) <= slack))
        return ok

    best_y = None
    while True:
        axes = [np.linspace(lo[i], hi[i], resolution)
                for i in range(oracle.dim_y)]
        spacing = float(np.max((hi - lo) / (resolution - 1)))
        slack = max(spacing, 1e-12)
        # The incumbent resets every pass: earlier passes use a looser
        # feasibility slack, so their values are not comparable.
        best_y = None
        best_v = np.inf
        for point in itertools.product(*axes):
            y = oracle.project_Y(np.array(point))
            if not feasible(y, slack):
                continue
            v = oracle.eval_g(x, y)
            if v < best_v:
                best_v = v
                best_y = y
        if best_y is None:
            raise SolverAbort("no feasible grid point found")
        if spacing <= refine_tol:
            break
        lo = np.maximum(lo, best_y - 2.0 * spacing)
        hi = np.minimum(hi, best_y + 2.0 * spacing)
    return best_y, float(best_v)


def active_set_qp(Q: np.ndarray, c: Vector,
                  A_ineq: Optional[np.ndarray] = None,
                  b_ineq: Optional[Vector] = None,
                  A_eq: Optional[np.ndarray] = None,
                  b_eq: Optional[Vector] = None) -> PrimalDualPair:
    """Exact KKT pair of  min ½ yᵀQy + cᵀy  s.t. A_ineq y <= b_ineq,
    A_eq y = b_eq  by enumerating active sets.

    Q must be symmetric positive definite; at most 16 inequalities.  Returns
    (y, mu) with mu ordered inequality rows first, then equality rows.
    """
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    n = c.size
    A_i = np.zeros((0, n)) if A_ineq is None else np.atleast_2d(
        np.asarray(A_ineq, dtype=float))
    b_i = np.zeros(0) if b_ineq is None else np.atleast_1d(
        np.asarray(b_ineq, dtype=float))
    A_e = np.zeros((0, n)) if A_eq is None else np.atleast_2d(
        np.asarray(A_eq, dtype=float))
    b_e = np.zeros(0) if b_eq is None else np.atleast_1d(
        np.asarray(b_eq, dtype=float))
    m_i, m_e = A_i.shape[0], A_e.shape[0]
    if m_i > 16:
        raise ConfigError(
            f"active-set enumeration capped at 16 inequalities, got {m_i}")
    if not np.allclose(Q, Q.T, atol=1e-12):
        raise ConfigError("Q must be symmetric")

    for r in range(m_i + 1):
        for active in itertools.combinations(range(m_i), r):
            act = list(active)
            A_act = np.vstack([A_i[act], A_e]) if (act or m_e) else \
                np.zeros((0, n))
            b_act = np.concatenate([b_i[act], b_e])
            k = A_act.shape[0]
            kkt = np.block([[Q, A_act.T],
                            [A_act, np.zeros((k, k))]])
            rhs = np.concatenate([-c, b_act])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                continue
            y = sol[:n]
            lam = sol[n:]
            lam_i_act = lam[:len(act)]
            lam_e = lam[len(act):]
            if np.any(lam_i_act < -1e-10):
                continue
            if m_i and np.any(A_i @ y - b_i > 1e-9):
                continue
            mu = np.zeros(m_i + m_e)
            mu[act] = np.maximum(lam_i_act, 0.0)
            mu[m_i:] = lam_e
            return PrimalDualPair(y, mu)
    raise SolverAbort("no active set yields a valid KKT pair "
                      "(degenerate or infeasible problem)")


def kkt_residual(oracle: BilevelOracle, x: Vector,
                 pd: PrimalDualPair) -> KktReport:
    """KKT residuals of the lower-level problem at (y, mu).

    Stationarity is measured as the norm of y - Proj_Y(y - grad_y L), which
    accounts for box-shaped Y domains.
    """
    y, mu = pd.y, pd.mu
    grad = oracle.grad_g_y(x, y) + oracle.vjp_gc_y(x, y, mu)
    stat = float(np.linalg.norm(y - oracle.project_Y(y - grad)))
    gc = oracle.eval_gc(x, y)
    viol = 0.0
    comp = 0.0
    dual = 0.0
    if oracle.num_ineq > 0:
        gi = gc[:oracle.num_ineq]
        mi = mu[:oracle.num_ineq]
        viol = float(np.max(gi, initial=0.0))
        comp = float(np.max(np.abs(mi * gi), initial=0.0))
        dual = float(max(0.0, -np.min(mi, initial=0.0)))
    if oracle.num_eq > 0:
        viol = max(viol, float(np.max(np.abs(gc[oracle.num_ineq:]),
                                      initial=0.0)))
    return KktReport(stationarity_norm=stat, max_primal_violation=viol,
                     max_complementarity=comp, dual_feasibility=dual)


def penalty_value(oracle: BilevelOracle, x: Vector, gamma: float,
                  config: MaxMinConfig,
                  bounds: Sequence[Tuple[float, float]],
                  init: Optional[PrimalDualPair] = None) -> float:
    """Numerically evaluate the penalty objective
    F_gamma(x) = f + gamma*(g - v(x)) + <mu, g^c> at its inner saddle point.

    The saddle point comes from a (tight) inner solve, v(x) from the grid
    oracle — independent of the outer solver's gradient estimates, so this is
    usable as a finite-difference reference for them.
    """
    if init is None:
        init = PrimalDualPair(np.zeros(oracle.dim_y),
                              np.zeros(oracle.num_constraints))
    pd = solve_maxmin_F(oracle, x, gamma, config, init).pd
    _, v_x = grid_oracle_lower(oracle, x, bounds)
    return float(oracle.eval_f(x, pd.y)
                 + gamma * (oracle.eval_g(x, pd.y) - v_x)
                 + np.dot(pd.mu, oracle.eval_gc(x, pd.y)))


def quadratic_growth_check(oracle: BilevelOracle, x: Vector,
                           y_star: Vector, v_x: float,
                           samples: int, seed: int,
                           sample_box: Sequence[Tuple[float, float]],
                           ) -> Tuple[bool, float]:
    """Sample feasible y and test g(x,y) - v(x) >= (alpha_g/2)|y - y*|^2.

    ``y_star`` and ``v_x`` must come from a trusted oracle (grid search or
    active-set QP).  Rejection sampling is budgeted at 100x the requested
    sample count; margins below -1e-9 fail the check.
    """
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in sample_box], dtype=float)
    hi = np.array([b[1] for b in sample_box], dtype=float)
    accepted = 0
    tried = 0
    worst = np.inf
    holds = True
    budget = 100 * samples
    while accepted < samples:
        if tried >= budget:
            raise SolverAbort(
                f"rejection sampling exhausted: {accepted}/{samples} feasible "
                f"points in {budget} draws")
        y = oracle.project_Y(rng.uniform(lo, hi))
        tried += 1
        gc = oracle.eval_gc(x, y)
        if oracle.num_ineq > 0 and np.any(gc[:oracle.num_ineq] > 0.0):
            continue
        if oracle.num_eq > 0 and np.any(
                np.abs(gc[oracle.num_ineq:]) > 1e-9):
            continue
        accepted += 1
        gap = oracle.eval_g(x, y) - v_x
        margin = gap - 0.5 * oracle.alpha_g * float(
            np.dot(y - y_star, y - y_star))
        worst = min(worst, margin)
        if margin < -1e-9:
            holds = False
    return holds, float(worst)
