import numpy as np
import pytest
from scipy.optimize import minimize

from implicit_sindy.differentiation import (
    DiffConfig,
    _integration_operator,
    central_difference,
    differentiate,
    tv_derivative,
    tv_objective,
)
from implicit_sindy.errors import NoConvergence, NonUniformGrid, TooFewSamples


def test_identity_signal():
    t = np.linspace(0, 3, 31)
    assert np.allclose(central_difference(t, t), 1.0, atol=1e-13)


def test_quadratic_exact():
    t = np.linspace(-1, 2, 61)
    d = central_difference(t, 3 * t**2 - t + 0.5)
    assert np.max(np.abs(d[1:-1] - (6 * t[1:-1] - 1))) <= 1e-12
    # the one-sided second-order stencils are exact for quadratics too
    assert np.max(np.abs(d - (6 * t - 1))) <= 1e-11


def test_quadratic_exact_nonuniform():
    t = np.cumsum(np.random.default_rng(0).uniform(0.05, 0.15, 40))
    d = central_difference(t, t**2)
    assert np.max(np.abs(d - 2 * t)) <= 1e-10


def test_sine_accuracy():
    t = np.arange(0, 2 * np.pi, 1e-3)
    assert np.max(np.abs(central_difference(t, np.sin(t)) - np.cos(t))) <= 1e-5


def test_matrix_input():
    t = np.linspace(0, 1, 11)
    X = np.column_stack([t**2, 2 * t])
    d = central_difference(t, X)
    assert np.allclose(d, np.column_stack([2 * t, 2 * np.ones_like(t)]))


def test_too_few_samples():
    with pytest.raises(TooFewSamples):
        central_difference([0.0, 1.0], [0.0, 1.0])


def tv_cfg(alpha, **kw):
    return DiffConfig("tv_regularized", alpha=alpha, **kw)


def test_tv_ramp():
    t = np.linspace(0, 1, 101)
    res = tv_derivative(t, t, tv_cfg(1e-3), full_output=True)
    assert np.max(np.abs(res.derivative - 1)) <= 1e-3
    assert res.converged
    # integrating back reproduces the series
    recon = _integration_operator(len(t), t[1] - t[0]) @ res.derivative
    assert np.max(np.abs(recon - t)) <= 1e-6


def test_tv_noisy_ramp():
    rng = np.random.default_rng(1)
    t = np.linspace(0, 1, 201)
    y = t + 0.01 * (2 * rng.random(len(t)) - 1)
    res = tv_derivative(t, y, tv_cfg(1e-2), full_output=True)
    assert np.max(np.abs(res.derivative[10:-10] - 1)) <= 0.05
    assert np.all(np.diff(res.objective) <= 1e-12 * res.objective[0])


def test_tv_step_against_direct_minimization():
    m = 31
    t = np.linspace(0, 1, m)
    y = np.abs(t - 0.5)
    cfg = tv_cfg(1e-3, eps=1e-6, max_iters=500, tol=1e-12)
    res = tv_derivative(t, y, cfg, full_output=True)
    u = res.derivative
    assert np.all(np.diff(res.objective) <= 1e-12 * res.objective[0])
    A = _integration_operator(m, t[1] - t[0])
    f = y - y[0]

    def obj(v):
        return tv_objective(v, A, f, cfg.alpha, cfg.eps)

    def grad(v):
        du = np.diff(v)
        g = du / np.sqrt(du * du + cfg.eps)
        tv = np.zeros(m)
        tv[:-1] -= g
        tv[1:] += g
        return cfg.alpha * tv + A.T @ (A @ v - f)

    direct = minimize(obj, np.zeros(m), jac=grad, method="L-BFGS-B",
                      options={"maxiter": 50_000, "ftol": 1e-15, "gtol": 1e-12})
    assert obj(u) <= direct.fun + 1e-9
    assert np.max(np.abs(u - direct.x)) <= 2e-2
    # the step from -1 to +1 is confined to a few samples around the kink
    transition = np.flatnonzero(np.abs(np.abs(u) - 1) > 0.1)
    assert len(transition) <= 5
    assert np.all(u[: m // 2 - 3] < -0.9) and np.all(u[m // 2 + 3:] > 0.9)


def test_tv_errors():
    t = np.array([0.0, 0.1, 0.3, 0.4])
    with pytest.raises(NonUniformGrid):
        tv_derivative(t, t, tv_cfg(1e-2))
    with pytest.raises(ValueError):
        DiffConfig("tv_regularized", alpha=0.0)
    t = np.linspace(0, 1, 50)
    with pytest.warns(NoConvergence):
        tv_derivative(t, np.sin(5 * t), tv_cfg(1e-2, max_iters=1, tol=1e-15))


def test_differentiate_dispatch():
    t = np.linspace(0, 1, 41)
    X = np.column_stack([t, 2 * t])
    assert np.allclose(differentiate(t, X), [[1, 2]] * 41)
    assert np.allclose(differentiate(t, X, tv_cfg(1e-4)), [[1, 2]] * 41, atol=1e-3)
