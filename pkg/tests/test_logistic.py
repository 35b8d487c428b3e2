import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varstep import logistic
from varstep.model import new_instance

from conftest import random_instance


def fd_gradient(instance, x, h=1e-6):
    g = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (logistic.evaluate(instance, x + e).loss - logistic.evaluate(instance, x - e).loss) / (2 * h)
    return g


def explicit_hessian(A, x):
    z = A @ x
    s = 1.0 / (1.0 + np.exp(-z))
    H = np.zeros((A.shape[1], A.shape[1]))
    for i in range(A.shape[0]):
        H += s[i] * (1 - s[i]) * np.outer(A[i], A[i])
    return H


def test_zero_point():
    inst = new_instance(np.array([[1.0, -2.0], [0.5, 1.0], [3.0, 0.0]]), [1, -1, 1])
    state = logistic.evaluate(inst, np.zeros(2))
    assert state.loss == pytest.approx(3 * math.log(2), rel=1e-15)
    np.testing.assert_array_equal(state.residuals, 0.5)
    np.testing.assert_array_equal(state.weights, 0.25)


def test_scalar_against_high_precision():
    inst = new_instance([[1.0]], [1])
    mpmath.mp.dps = 40
    expected = float(mpmath.log(1 + mpmath.e ** -1))
    assert logistic.evaluate(inst, np.array([1.0])).loss == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("x", [1000.0, -1000.0, 1e8, -1e8])
def test_extreme_margins_stay_finite(x):
    inst = new_instance([[1.0]], [1])
    state = logistic.evaluate(inst, np.array([x]))
    assert np.isfinite(state.loss)
    assert np.all(np.isfinite(state.residuals)) and np.all(np.isfinite(state.weights))
    if x > 0:
        assert state.loss < 1e-300 or state.loss == pytest.approx(math.exp(-x))
        assert state.residuals[0] < 1e-300
    else:
        assert state.loss == pytest.approx(-x)
        assert state.residuals[0] == 1.0


def test_log_curvature_matches_high_precision():
    mpmath.mp.dps = 40
    z = np.linspace(-30, 30, 61)
    oracle = [float(mpmath.log(mpmath.exp(v) / (1 + mpmath.exp(v)) ** 2)) for v in z]
    np.testing.assert_allclose(logistic.log_curvature(z), oracle, rtol=1e-13)
    assert np.all(np.isfinite(logistic.log_curvature(np.array([-1e5, 1e5]))))


def test_gradient_at_zero_identity():
    inst = new_instance(np.eye(2), [1, 1])
    g = logistic.gradient(inst, logistic.evaluate(inst, np.zeros(2)))
    np.testing.assert_array_equal(g, [-0.5, -0.5])


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    inst = random_instance(rng, m=4, n=3)
    x = rng.uniform(-3, 3, size=3)
    g = logistic.gradient(inst, logistic.evaluate(inst, x))
    fd = fd_gradient(inst, x)
    assert np.linalg.norm(g - fd) <= 1e-6 * max(np.linalg.norm(fd), 1e-12)


def test_rejects_wrong_shape_and_nan():
    inst = new_instance(np.eye(2), [1, 1])
    with pytest.raises(ValueError):
        logistic.evaluate(inst, np.zeros(3))
    with pytest.raises(ValueError):
        logistic.evaluate(inst, np.array([np.nan, 0.0]))


def test_quadratic_form_zero_direction():
    inst = new_instance(np.eye(2), [1, 1])
    state = logistic.evaluate(inst, np.array([0.3, -1.0]))
    assert logistic.hessian_quadratic_form(inst, state, np.zeros(2)) == 0.0


def test_quadratic_form_matches_explicit_hessian():
    A = np.array([[1.5, -0.5], [0.25, 2.0]])
    inst = new_instance(A, [1, 1])
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.uniform(-2, 2, size=2)
        d = rng.uniform(-2, 2, size=2)
        q = logistic.hessian_quadratic_form(inst, logistic.evaluate(inst, x), d)
        assert q == pytest.approx(d @ explicit_hessian(A, x) @ d, abs=1e-12)


def test_ratio_at_zero_is_closed_form():
    rng = np.random.default_rng(5)
    for _ in range(10):
        inst = random_instance(rng, m=6, n=3)
        state = logistic.evaluate(inst, np.zeros(3))
        try:
            r = logistic.l2_smoothness_ratio(inst, state)
        except logistic.DegenerateDirection:
            continue
        assert r == pytest.approx(0.25 / math.log(2), rel=1e-12)


def test_ratio_degenerate_direction():
    # balanced rows: the gradient at zero vanishes
    inst = new_instance(np.array([[1.0], [-1.0]]), [1, 1])
    with pytest.raises(logistic.DegenerateDirection):
        logistic.l2_smoothness_ratio(inst, logistic.evaluate(inst, np.zeros(1)))


def test_stability_check_identity_and_precondition():
    inst = new_instance(np.array([[1.0, 2.0], [-1.0, 0.5]]), [1, 1])
    x = np.array([0.2, -0.4])
    assert logistic.hessian_stability_check(inst, x, x)
    with pytest.raises(ValueError):
        logistic.hessian_stability_check(inst, x, x + np.array([10.0 / inst.entry_bound_M, 0.0]))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_weight_sum_and_gradient_bounds(m, n, seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, m=m, n=n)
    x = rng.uniform(-5, 5, size=n)
    state = logistic.evaluate(inst, x)
    g = logistic.gradient(inst, state)
    assert np.sum(state.weights) <= state.loss * (1 + 1e-12)
    assert np.max(np.abs(g)) <= inst.entry_bound_M * state.loss * (1 + 1e-12)
    d = rng.uniform(-1, 1, size=n)
    q = logistic.hessian_quadratic_form(inst, state, d)
    assert q <= inst.entry_bound_M ** 2 * state.loss * np.sum(np.abs(d)) ** 2 * (1 + 1e-12)
