import numpy as np
import pytest

from blocc import (ConfigError, PrimalDualPair, build_pedagogical,
                   lagrangian_F_grads, lagrangian_g_grads)


@pytest.fixture
def ped():
    return build_pedagogical()


def test_lagrangian_g_at_kkt_point(ped):
    # x=1, y=3, mu=2 is the exact KKT point: both gradients vanish.
    gy, gmu = lagrangian_g_grads(ped, np.array([1.0]),
                                 PrimalDualPair(np.array([3.0]),
                                                np.array([2.0])))
    assert gy == pytest.approx(0.0, abs=1e-12)
    assert gmu == pytest.approx(0.0, abs=1e-12)


def test_lagrangian_g_off_kkt(ped):
    gy, gmu = lagrangian_g_grads(ped, np.array([1.0]),
                                 PrimalDualPair(np.array([2.0]),
                                                np.array([0.0])))
    assert gy == pytest.approx(0.0, abs=1e-12)
    assert gmu == pytest.approx(1.0, abs=1e-12)


def test_lagrangian_g_zero_multiplier_reduces_to_grad_g(ped):
    x = np.array([0.7])
    y = np.array([1.3])
    gy, _ = lagrangian_g_grads(ped, x, PrimalDualPair(y, np.zeros(1)))
    assert gy == pytest.approx(ped.grad_g_y(x, y))


def test_lagrangian_F_collapses_to_g_when_f_zero_gamma_one(ped):
    x = np.array([0.9])
    pd = PrimalDualPair(np.array([1.7]), np.array([0.4]))
    gy_F, gmu_F = lagrangian_F_grads(ped, x, pd, gamma=1.0)
    gy_g, gmu_g = lagrangian_g_grads(ped, x, pd)
    assert gy_F == pytest.approx(gy_g)
    assert gmu_F == pytest.approx(gmu_g)


def test_lagrangian_F_quadratic_upper_example():
    # f = y^2/2 variant: grad_y = y + 2*gamma*(y-2x) - mu at x=1,y=3,mu=4,
    # gamma=2 gives 3 + 4 - 4 = 3.
    ped = build_pedagogical("quadratic")
    x = np.array([1.0])
    pd = PrimalDualPair(np.array([3.0]), np.array([4.0]))
    gy, gmu = lagrangian_F_grads(ped, x, pd, gamma=2.0)
    # quadratic upper here is (y-3)^2/2 so grad_f_y = 0 at y=3:
    # gy = 0 + 2*2*(3-2) + 4*(-1) = 0
    assert gy == pytest.approx(0.0, abs=1e-12)
    assert gmu == pytest.approx(0.0, abs=1e-12)


def test_lagrangian_F_linear_in_gamma(ped):
    x = np.array([0.5])
    pd = PrimalDualPair(np.array([2.0]), np.zeros(1))
    gy1, _ = lagrangian_F_grads(ped, x, pd, gamma=1.0)
    gy2, _ = lagrangian_F_grads(ped, x, pd, gamma=2.0)
    assert gy2 == pytest.approx(2.0 * gy1)


def test_grad_mu_identical_between_lagrangians(ped):
    x = np.array([1.4])
    pd = PrimalDualPair(np.array([0.2]), np.array([1.1]))
    _, gmu_g = lagrangian_g_grads(ped, x, pd)
    _, gmu_F = lagrangian_F_grads(ped, x, pd, gamma=3.0)
    assert gmu_g == pytest.approx(gmu_F)
    assert gmu_g == pytest.approx(ped.eval_gc(x, pd.y))


def test_nonpositive_gamma_rejected(ped):
    pd = PrimalDualPair(np.zeros(1), np.zeros(1))
    with pytest.raises(ConfigError):
        lagrangian_F_grads(ped, np.zeros(1), pd, gamma=0.0)
    with pytest.raises(ConfigError):
        lagrangian_F_grads(ped, np.zeros(1), pd, gamma=-1.0)


def test_dimension_mismatch_reports_lengths(ped):
    pd = PrimalDualPair(np.zeros(2), np.zeros(1))
    with pytest.raises(ValueError, match="2"):
        lagrangian_g_grads(ped, np.zeros(1), pd)
    pd = PrimalDualPair(np.zeros(1), np.zeros(3))
    with pytest.raises(ValueError, match="3"):
        lagrangian_g_grads(ped, np.zeros(1), pd)


def test_primal_dual_pair_copy_is_deep():
    pd = PrimalDualPair(np.array([1.0]), np.array([2.0]))
    cp = pd.copy()
    cp.y[0] = 5.0
    assert pd.y[0] == 1.0
