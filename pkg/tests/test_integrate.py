import numpy as np
import pytest
from scipy.integrate import solve_ivp

from implicit_sindy.errors import IntegrationFailure
from implicit_sindy.integrate import integrate


def decay(t, y):
    return -y


def test_exponential_decay():
    y = integrate(decay, np.array([0.0, 1.0]), np.array([1.0]))
    assert abs(y[-1, 0] - np.exp(-1)) < 1e-8


def test_fixed_step_convergence_order():
    errs = []
    for h in [0.2, 0.1, 0.05]:
        y = integrate(decay, np.array([0.0, 1.0]), np.array([1.0]), fixed_step=h)
        errs.append(abs(y[-1, 0] - np.exp(-1)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    # fifth-order method: halving h divides the error by about 2^5
    assert np.all(np.log2(ratios) > 4.5)


def van_der_pol(t, y, mu=1.5):
    x, v = y[..., 0], y[..., 1]
    return np.stack([v, mu * (1 - x**2) * v - x], axis=-1)


def test_against_solve_ivp():
    t = np.linspace(0, 10, 201)
    ours = integrate(van_der_pol, t, np.array([2.0, 0.0]))
    ref = solve_ivp(van_der_pol, (0, 10), [2.0, 0.0], t_eval=t, rtol=1e-12, atol=1e-13, method="DOP853")
    assert np.max(np.abs(ours - ref.y.T)) < 1e-7


def test_batch_matches_individual():
    t = np.linspace(0, 5, 51)
    ics = np.array([[2.0, 0.0], [0.5, 1.0], [-1.0, 0.3]])
    batch = integrate(van_der_pol, t, ics)
    for j, ic in enumerate(ics):
        single = integrate(van_der_pol, t, ic)
        assert np.max(np.abs(batch[:, j] - single)) < 1e-7


def test_blow_up_raises():
    with pytest.raises(IntegrationFailure):
        integrate(lambda t, y: y**2, np.array([0.0, 2.0]), np.array([1.0]))
