"""Property tests for solver invariants: multiplier sign handling, projection
idempotence, and linearity of the constraint VJPs."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from blocc import (build_pedagogical, build_svm, build_toy, build_transport,
                   clamp_multipliers, momentum_coefficient, mu_ascent_step,
                   parse_libsvm, three_node_spec)

_TOY = build_toy()
_PED = build_pedagogical()
_TP = build_transport(three_node_spec())
_SVM = build_svm(parse_libsvm(
    "+1 1:1.0 2:0.5\n-1 1:-0.8 2:1.0\n+1 1:0.9 2:-0.3\n"
    "-1 1:-1.1 2:0.2\n+1 1:0.7 2:0.8\n", seed=0))

_finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False,
                    allow_infinity=False)


def _vec(n):
    return arrays(np.float64, n, elements=_finite)


@settings(max_examples=300, deadline=None)
@given(_vec(4), _vec(4), st.floats(min_value=1e-6, max_value=10.0))
def test_mu_ascent_keeps_inequality_block_nonnegative(grad, mu, eta):
    out = mu_ascent_step(grad, mu, eta, num_ineq=2)
    assert np.all(out[:2] >= 0.0)


@settings(max_examples=300, deadline=None)
@given(_vec(6))
def test_clamp_multipliers_idempotent(mu):
    once = clamp_multipliers(mu, num_ineq=3)
    twice = clamp_multipliers(once, num_ineq=3)
    assert np.array_equal(once, twice)
    assert np.all(once[:3] >= 0.0)
    assert np.array_equal(once[3:], mu[3:])


@settings(max_examples=200, deadline=None)
@given(_vec(1))
def test_box_projection_idempotent_scalar_problems(v):
    for oracle in (_TOY, _PED):
        px = oracle.project_X(v)
        assert np.array_equal(oracle.project_X(px), px)
        py = oracle.project_Y(v)
        assert np.array_equal(oracle.project_Y(py), py)


@settings(max_examples=100, deadline=None)
@given(_vec(42), _vec(6))
def test_transport_projections_idempotent(y, x):
    py = _TP.project_Y(y)
    assert np.array_equal(_TP.project_Y(py), py)
    px = _TP.project_X(x)
    assert np.array_equal(_TP.project_X(px), px)
    assert np.all(px >= 0.0)


@settings(max_examples=100, deadline=None)
@given(_vec(6), _vec(6), st.floats(min_value=-5, max_value=5),
       st.floats(min_value=-5, max_value=5))
def test_svm_vjp_linear_in_mu(mu1, mu2, a, b):
    rng = np.random.default_rng(0)
    x = rng.normal(size=_SVM.dim_x)
    y = rng.normal(size=_SVM.dim_y)
    combo = _SVM.vjp_gc_y(x, y, a * mu1 + b * mu2)
    parts = a * _SVM.vjp_gc_y(x, y, mu1) + b * _SVM.vjp_gc_y(x, y, mu2)
    assert np.allclose(combo, parts, rtol=1e-9, atol=1e-6)
    combo_x = _SVM.vjp_gc_x(x, y, a * mu1 + b * mu2)
    parts_x = a * _SVM.vjp_gc_x(x, y, mu1) + b * _SVM.vjp_gc_x(x, y, mu2)
    assert np.allclose(combo_x, parts_x, rtol=1e-9, atol=1e-6)


@settings(max_examples=100, deadline=None)
@given(_vec(24), _vec(24), st.floats(min_value=-5, max_value=5),
       st.floats(min_value=-5, max_value=5))
def test_transport_vjp_linear_in_mu(mu1, mu2, a, b):
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 2, _TP.dim_x)
    y = _TP.project_Y(rng.uniform(0, 1, _TP.dim_y))
    combo = _TP.vjp_gc_y(x, y, a * mu1 + b * mu2)
    parts = a * _TP.vjp_gc_y(x, y, mu1) + b * _TP.vjp_gc_y(x, y, mu2)
    assert np.allclose(combo, parts, rtol=1e-9, atol=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_momentum_coefficient_bounded(t):
    beta = momentum_coefficient(t)
    assert -0.5 <= beta < 1.0
