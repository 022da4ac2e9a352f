import numpy as np
import pytest

from blocc import (ConfigError, LipschitzBounds, MaxMinConfig, MaxMinMode,
                   PrimalDualPair, build_pedagogical, build_toy,
                   default_stepsizes_F, default_stepsizes_g, inner_y_descent,
                   momentum_coefficient, mu_ascent_step, solve_maxmin,
                   solve_maxmin_g)


def test_momentum_coefficient_values():
    assert momentum_coefficient(0) == pytest.approx(-0.5)
    assert momentum_coefficient(1) == 0.0
    assert momentum_coefficient(3) == pytest.approx(0.4)


def test_inner_y_descent_pedagogical_converges():
    ped = build_pedagogical()
    x = np.array([1.0])

    def grad_y(y, mu):
        return ped.grad_g_y(x, y) + ped.vjp_gc_y(x, y, mu)

    y = inner_y_descent(grad_y, ped.project_Y, np.zeros(1), np.array([2.0]),
                        eta_y=0.25, steps=200)
    # minimizer of (y-2)^2 + 2(3-y) is y = 2 + mu/2 = 3
    assert y[0] == pytest.approx(3.0, abs=1e-6)


def test_inner_y_descent_fixed_point_unchanged():
    ped = build_pedagogical()
    x = np.array([1.0])

    def grad_y(y, mu):
        return ped.grad_g_y(x, y) + ped.vjp_gc_y(x, y, mu)

    y = inner_y_descent(grad_y, ped.project_Y, np.array([3.0]),
                        np.array([2.0]), eta_y=0.25, steps=50)
    assert y[0] == pytest.approx(3.0, abs=1e-12)


def test_inner_y_descent_projection_onto_box():
    # g = y^2/2 over Y = [1, inf): one step from 0 goes negative, projection
    # returns 1.
    y = inner_y_descent(lambda y, mu: y, lambda v: np.maximum(v, 1.0),
                        np.zeros(1), np.zeros(0), eta_y=0.5, steps=1)
    assert y[0] == 1.0


def test_mu_ascent_clamps_inequality_block_only():
    out = mu_ascent_step(np.zeros(2), np.array([-1.0, 2.0]), 1.0, num_ineq=2)
    assert out == pytest.approx([0.0, 2.0])
    out = mu_ascent_step(np.array([1.0]), np.array([0.0]), 0.5, num_ineq=1)
    assert out == pytest.approx([0.5])
    out = mu_ascent_step(np.array([1.0]), np.array([-1.0]), 1.0, num_ineq=0)
    assert out == pytest.approx([0.0])
    assert mu_ascent_step(np.array([-5.0]), np.array([1.0]), 1.0,
                          num_ineq=0)[0] == pytest.approx(-4.0)


def _scalar_affine_grads():
    # min_y y^2/2 s.t. 1 - y <= 0; saddle point (y, mu) = (1, 1).
    grad_y = lambda y, mu: y - mu
    grad_mu = lambda y: 1.0 - y
    return grad_y, grad_mu


def test_solve_maxmin_accelerated_pedagogical():
    ped = build_pedagogical()
    cfg = MaxMinConfig(mode=MaxMinMode.ACCELERATED, outer_iters=500,
                       inner_y_iters=30, eta_y=0.25, eta_mu=0.5)
    res = solve_maxmin_g(ped, np.array([1.0]), cfg,
                         PrimalDualPair(np.zeros(1), np.zeros(1)))
    assert res.pd.y[0] == pytest.approx(3.0, abs=1e-5)
    assert res.pd.mu[0] == pytest.approx(2.0, abs=1e-5)


def test_solve_maxmin_single_loop_scalar_affine():
    grad_y, grad_mu = _scalar_affine_grads()
    cfg = MaxMinConfig(mode=MaxMinMode.SINGLE_LOOP, outer_iters=2000,
                       inner_y_iters=1, eta_y=0.5, eta_mu=0.5, tol=1e-12)
    res = solve_maxmin(grad_y, grad_mu, lambda v: v, 1, cfg,
                       PrimalDualPair(np.zeros(1), np.zeros(1)))
    assert res.pd.y[0] == pytest.approx(1.0, abs=1e-8)
    assert res.pd.mu[0] == pytest.approx(1.0, abs=1e-8)


def test_solve_maxmin_immediate_exit_at_fixed_point():
    grad_y, grad_mu = _scalar_affine_grads()
    cfg = MaxMinConfig(mode=MaxMinMode.SINGLE_LOOP, outer_iters=100,
                       inner_y_iters=1, eta_y=0.5, eta_mu=0.5, tol=1e-12)
    res = solve_maxmin(grad_y, grad_mu, lambda v: v, 1, cfg,
                       PrimalDualPair(np.ones(1), np.ones(1)))
    assert res.iterations_used == 1
    assert res.final_step_norm == 0.0


def test_solve_maxmin_variant_agreement_scalar_affine():
    grad_y, grad_mu = _scalar_affine_grads()
    res = {}
    for mode, ty in ((MaxMinMode.ACCELERATED, 5), (MaxMinMode.SINGLE_LOOP, 1)):
        cfg = MaxMinConfig(mode=mode, outer_iters=5000, inner_y_iters=ty,
                           eta_y=0.4, eta_mu=0.4, tol=1e-10)
        res[mode] = solve_maxmin(grad_y, grad_mu, lambda v: v, 1, cfg,
                                 PrimalDualPair(np.zeros(1), np.zeros(1)))
    da = res[MaxMinMode.ACCELERATED].pd
    ds = res[MaxMinMode.SINGLE_LOOP].pd
    assert da.y == pytest.approx(ds.y, abs=1e-6)
    assert da.mu == pytest.approx(ds.mu, abs=1e-6)


def test_solve_maxmin_mu_nonneg_every_iteration():
    grad_y, grad_mu = _scalar_affine_grads()
    cfg = MaxMinConfig(mode=MaxMinMode.ACCELERATED, outer_iters=300,
                       inner_y_iters=3, eta_y=0.4, eta_mu=0.6)
    res = solve_maxmin(grad_y, grad_mu, lambda v: v, 1, cfg,
                       PrimalDualPair(np.array([5.0]), np.array([4.0])),
                       record_iterates=True)
    for it in res.iterates:
        assert it.mu[0] >= 0.0


def test_solve_maxmin_determinism():
    ped = build_pedagogical()
    cfg = MaxMinConfig(outer_iters=200, inner_y_iters=10, eta_y=0.25,
                       eta_mu=0.5)
    runs = []
    for _ in range(2):
        r = solve_maxmin_g(ped, np.array([1.3]), cfg,
                           PrimalDualPair(np.zeros(1), np.zeros(1)),
                           record_iterates=True)
        runs.append(r)
    for a, b in zip(runs[0].iterates, runs[1].iterates):
        assert np.array_equal(a.y, b.y)
        assert np.array_equal(a.mu, b.mu)


def test_config_validation():
    with pytest.raises(ConfigError):
        MaxMinConfig(outer_iters=0)
    with pytest.raises(ConfigError):
        MaxMinConfig(mode=MaxMinMode.SINGLE_LOOP, inner_y_iters=2)
    with pytest.raises(ConfigError):
        MaxMinConfig(eta_y=0.0)
    with pytest.raises(ConfigError):
        MaxMinConfig(tol=-1.0)


def test_default_stepsizes_g_remark1():
    lips = LipschitzBounds(l_g1=2.0, l_gc0=1.0, l_gc1=0.0)
    s = default_stepsizes_g(lips, alpha_g=2.0, mode=MaxMinMode.ACCELERATED)
    assert (s.eta_y, s.eta_mu) == pytest.approx((0.5, 2.0))
    assert not s.from_defaults


def test_default_stepsizes_g_fallbacks():
    toy = build_toy()
    s = default_stepsizes_g(None, alpha_g=2.0, mode=MaxMinMode.ACCELERATED,
                            defaults=toy.default_steps_g)
    assert (s.eta_y, s.eta_mu) == toy.default_steps_g
    assert s.from_defaults
    # degenerate l_gc0 = 0 falls back too
    lips = LipschitzBounds(l_g1=2.0, l_gc0=0.0, l_gc1=0.0)
    s = default_stepsizes_g(lips, alpha_g=2.0, mode=MaxMinMode.ACCELERATED,
                            defaults=(0.1, 0.2))
    assert s.from_defaults
    with pytest.raises(ConfigError):
        default_stepsizes_g(None, alpha_g=2.0, mode=MaxMinMode.ACCELERATED)


def test_default_stepsizes_F_remark1():
    lips = LipschitzBounds(l_f1=1.0, l_g1=2.0, l_gc0=1.0, l_gc1=0.0)
    s = default_stepsizes_F(lips, alpha_g=2.0, gamma=2.0,
                            mode=MaxMinMode.ACCELERATED)
    assert (s.eta_y, s.eta_mu) == pytest.approx((0.2, 3.0))


def test_default_stepsizes_F_gamma_boundary_error():
    lips = LipschitzBounds(l_f1=1.0, l_g1=2.0, l_gc0=1.0, l_gc1=0.0)
    with pytest.raises(ConfigError, match="gamma"):
        default_stepsizes_F(lips, alpha_g=2.0, gamma=0.5,
                            mode=MaxMinMode.ACCELERATED)


def test_default_stepsizes_F_zero_lf1_collapses_to_scaled_g_rule():
    lips = LipschitzBounds(l_f1=0.0, l_g1=2.0, l_gc0=1.0, l_gc1=0.0)
    s = default_stepsizes_F(lips, alpha_g=2.0, gamma=3.0,
                            mode=MaxMinMode.ACCELERATED)
    assert s.eta_y == pytest.approx(1.0 / 6.0)
    assert s.eta_mu == pytest.approx(6.0)
