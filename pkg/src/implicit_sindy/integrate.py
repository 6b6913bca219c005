"""Dormand-Prince 5(4) integrator with dense output, vectorized over a batch.

A batch of independent initial conditions is advanced with a shared step
size; the step is accepted only if every member meets the tolerance.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import IntegrationFailure, NonFiniteState

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between the 5th- and embedded 4th-order weights (7 stages incl. FSAL)
E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension, y(t + s h) = y + h * sum_j (K^T P)_j s^(j+1)
P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

ORDER = 5
SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0

Rhs = Callable[[float, np.ndarray], np.ndarray]


def _rms_max(err: np.ndarray, scale: np.ndarray) -> float:
    r = (err / scale).reshape(-1, err.shape[-1])
    return float(np.max(np.sqrt(np.mean(r * r, axis=1))))


def _initial_step(fun: Rhs, t0: float, y0: np.ndarray, f0: np.ndarray, rtol: float, atol: float) -> float:
    scale = atol + np.abs(y0) * rtol
    d0 = _rms_max(y0, scale)
    d1 = _rms_max(f0, scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = fun(t0 + h0, y0 + h0 * f0)
    d2 = _rms_max(f1 - f0, scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / ORDER)
    return min(100 * h0, h1)


def _stages(fun: Rhs, t: float, y: np.ndarray, f0: np.ndarray, h: float):
    K = [f0]
    for i in range(1, 6):
        dy = sum(a * k for a, k in zip(A[i], K))
        K.append(fun(t + C[i] * h, y + h * dy))
    y_new = y + h * sum(b * k for b, k in zip(B, K))
    return K, y_new


def integrate(
    fun: Rhs,
    t_grid: np.ndarray,
    y0: np.ndarray,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_steps: int = 1_000_000,
    fixed_step: float | None = None,
) -> np.ndarray:
    """Integrate ``y' = fun(t, y)`` and return the solution sampled on ``t_grid``.

    Parameters
    ----------
    fun : callable
        Right-hand side; must accept the full ``y`` array (any leading batch
        shape) and return an array of the same shape.
    t_grid : array_like
        Strictly increasing output times; ``t_grid[0]`` is the initial time.
    y0 : array_like
        Initial state, shape ``(n,)`` or ``(batch, n)``.
    fixed_step : float, optional
        Disable error control and march with this step (the final step is
        shortened to land on ``t_grid[-1]``).

    Returns
    -------
    ndarray of shape ``(len(t_grid),) + y0.shape``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    y = np.array(y0, dtype=float)
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    out = np.empty((len(t_grid),) + y.shape)
    out[0] = y
    if len(t_grid) == 1:
        return out

    t, tf = float(t_grid[0]), float(t_grid[-1])
    f = fun(t, y)
    if not np.all(np.isfinite(f)):
        raise NonFiniteState(f"non-finite derivative at t={t}")
    h = fixed_step if fixed_step is not None else _initial_step(fun, t, y, f, rtol, atol)
    next_out = 1
    steps = 0
    while next_out < len(t_grid):
        if steps >= max_steps:
            raise IntegrationFailure(f"exceeded {max_steps} steps at t={t}")
        h = min(h, tf - t)
        if fixed_step is not None and tf - t - h < 1e-9 * h:
            h = tf - t
        if h <= 10 * np.finfo(float).eps * max(abs(t), 1.0):
            raise IntegrationFailure(f"step size underflow at t={t}")
        K, y_new = _stages(fun, t, y, f, h)
        finite = np.all(np.isfinite(y_new))
        f_new = fun(t + h, y_new) if finite else None
        if finite:
            finite = np.all(np.isfinite(f_new))
        if fixed_step is not None:
            if not finite:
                raise NonFiniteState(f"non-finite state at t={t + h}")
            err_norm = 0.0
        elif not finite:
            h *= MIN_FACTOR
            steps += 1
            continue
        else:
            K.append(f_new)
            err = h * np.tensordot(E, np.stack(K), axes=(0, 0))
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = _rms_max(err, scale)
            if err_norm > 1.0:
                h *= max(MIN_FACTOR, SAFETY * err_norm ** (-1 / ORDER))
                steps += 1
                continue
        if len(K) == 6:
            K.append(f_new)
        t_new = t + h
        # dense output for grid points inside (t, t_new]
        if t_grid[next_out] <= t_new:
            Q = np.tensordot(P.T, np.stack(K), axes=(1, 0))
            while next_out < len(t_grid) and t_grid[next_out] <= t_new:
                s = (t_grid[next_out] - t) / h
                powers = s ** np.arange(1, 5)
                out[next_out] = y + h * np.tensordot(powers, Q, axes=(0, 0))
                next_out += 1
            if t_grid[next_out - 1] == t_new:
                out[next_out - 1] = y_new
        t, y, f = t_new, y_new, f_new
        steps += 1
        if fixed_step is None:
            factor = MAX_FACTOR if err_norm == 0 else min(MAX_FACTOR, SAFETY * err_norm ** (-1 / ORDER))
            h *= factor
    return out
