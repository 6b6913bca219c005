"""Numerical time derivatives: finite differences and total-variation regularization."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import NoConvergence, NonUniformGrid, TooFewSamples


@dataclass(frozen=True)
class DiffConfig:
    method: str = "central"
    alpha: float = 1e-3
    max_iters: int = 200
    tol: float = 1e-8
    eps: float = 1e-8

    def __post_init__(self):
        if self.method not in ("central", "tv_regularized"):
            raise ValueError(f"unknown differentiation method {self.method!r}")
        if self.alpha < 0 or (self.method == "tv_regularized" and self.alpha <= 0):
            raise ValueError("alpha must be positive for tv_regularized")


def _stencil(h1: float, h2: float, where: str) -> tuple[float, float, float]:
    """Weights of the quadratic interpolant's derivative on three points."""
    if where == "center":  # points at -h1, 0, h2
        return -h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))
    if where == "left":  # points at 0, h1, h1 + h2
        return -(2 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2))
    # right: points at -(h1 + h2), -h2, 0
    return h2 / (h1 * (h1 + h2)), -(h1 + h2) / (h1 * h2), (h1 + 2 * h2) / (h2 * (h1 + h2))


def central_difference(times, series) -> np.ndarray:
    """Second-order derivative estimate on a possibly non-uniform grid.

    Interior points use the three-point central stencil, endpoints the
    one-sided three-point stencil, so the output has one value per sample.
    ``series`` may be a vector or an ``m x n`` matrix (differentiated along
    axis 0).
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(series, dtype=float)
    if len(t) < 3:
        raise TooFewSamples(f"need at least 3 samples, got {len(t)}")
    if y.shape[0] != len(t):
        raise ValueError("series and times have different lengths")
    h = np.diff(t)
    if np.any(h <= 0):
        raise ValueError("times must be strictly increasing")
    shape = (-1,) + (1,) * (y.ndim - 1)
    h1, h2 = h[:-1], h[1:]
    a, b, c = _stencil(h1, h2, "center")
    out = np.empty_like(y)
    out[1:-1] = a.reshape(shape) * y[:-2] + b.reshape(shape) * y[1:-1] + c.reshape(shape) * y[2:]
    a, b, c = _stencil(h[0], h[1], "left")
    out[0] = a * y[0] + b * y[1] + c * y[2]
    a, b, c = _stencil(h[-2], h[-1], "right")
    out[-1] = a * y[-3] + b * y[-2] + c * y[-1]
    return out


@dataclass
class TVResult:
    derivative: np.ndarray
    objective: list = field(default_factory=list)
    converged: bool = False
    n_iters: int = 0


def _integration_operator(m: int, dt: float) -> np.ndarray:
    """Cumulative trapezoid rule: ``(A u)_i`` integrates u from t_0 to t_i."""
    A = np.zeros((m, m))
    for i in range(1, m):
        A[i, 0] = 0.5
        A[i, 1:i] = 1.0
        A[i, i] = 0.5
    return A * dt


def tv_objective(u: np.ndarray, A: np.ndarray, f: np.ndarray, alpha: float, eps: float) -> float:
    du = np.diff(u)
    return float(alpha * np.sum(np.sqrt(du * du + eps)) + 0.5 * np.sum((A @ u - f) ** 2))


def tv_derivative(times, series, cfg: DiffConfig | None = None, full_output: bool = False):
    """Total-variation regularized derivative by lagged-diffusivity iteration.

    Minimizes ``alpha * sum sqrt((u[i+1]-u[i])^2 + eps) + 0.5 ||A u - (f - f[0])||^2``
    where ``A`` is cumulative trapezoid integration. Each step freezes the
    diffusivity ``1/sqrt(du^2 + eps)`` and solves the resulting SPD system.
    """
    cfg = cfg or DiffConfig(method="tv_regularized")
    if cfg.alpha <= 0:
        raise ValueError("alpha must be positive")
    t = np.asarray(times, dtype=float)
    y = np.asarray(series, dtype=float).ravel()
    m = len(t)
    if m < 3:
        raise TooFewSamples(f"need at least 3 samples, got {m}")
    if len(y) != m:
        raise ValueError("series and times have different lengths")
    h = np.diff(t)
    dt = h.mean()
    if np.any(h <= 0) or np.max(np.abs(h - dt)) > 1e-9 * max(abs(dt), 1.0):
        raise NonUniformGrid("tv_derivative needs a uniform time grid")
    A = _integration_operator(m, dt)
    f = y - y[0]
    AtA = A.T @ A
    Atf = A.T @ f
    D = np.diff(np.eye(m), axis=0)
    u = central_difference(t, y)
    history = [tv_objective(u, A, f, cfg.alpha, cfg.eps)]
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        w = 1.0 / np.sqrt(np.diff(u) ** 2 + cfg.eps)
        H = AtA + cfg.alpha * (D.T * w) @ D
        u_new = cho_solve(cho_factor(H), Atf)
        change = np.linalg.norm(u_new - u) / max(np.linalg.norm(u), np.finfo(float).tiny)
        u = u_new
        history.append(tv_objective(u, A, f, cfg.alpha, cfg.eps))
        if change < cfg.tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"TV derivative did not converge in {cfg.max_iters} iterations", NoConvergence,
                      stacklevel=2)
    if full_output:
        return TVResult(u, history, converged, it)
    return u


def differentiate(times, states, cfg: DiffConfig | None = None) -> np.ndarray:
    """Derivative of each state column by the configured method."""
    cfg = cfg or DiffConfig()
    X = np.asarray(states, dtype=float)
    if cfg.method == "central":
        return central_difference(times, X)
    cols = X.reshape(len(X), -1).T
    return np.column_stack([tv_derivative(times, c, cfg) for c in cols]).reshape(X.shape)
