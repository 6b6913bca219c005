"""Sparse solvers: the sparsest vector in a null space, and sparse regression.

The null-space path works in library-normalized coordinates (unit-norm
columns, unit-norm coefficient vectors); regression returns raw
coefficients.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllTermsEliminated,
    DegenerateLambda,
    DimensionMismatch,
    EmptyNullSpace,
    NoConvergence,
    NumericalFailure,
    RankDeficientActiveSet,
    UnderdeterminedLibrary,
)
from .library import EvaluatedLibrary


@dataclass(frozen=True)
class NullSpaceBasis:
    """Orthonormal basis ``N`` (p x r) of the numerical null space of a library."""

    basis: np.ndarray
    singular_values: np.ndarray
    rank_tol: float
    theta: np.ndarray | None = field(default=None, repr=False)
    sign_mask: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def residual_floor(self) -> float:
        """Residual at or below which a unit vector counts as null at this rank tolerance."""
        if self.theta is None or self.theta.shape[0] == 0:
            return self.rank_tol
        return self.rank_tol / np.sqrt(self.theta.shape[0])

    def residual(self, xi: np.ndarray) -> float:
        """``||Theta xi|| / sqrt(m)``, or the distance from span(N) when no library is attached."""
        if self.theta is not None and self.theta.shape[0] > 0:
            return float(np.linalg.norm(self.theta @ xi) / np.sqrt(self.theta.shape[0]))
        return float(np.linalg.norm(xi - self.basis @ (self.basis.T @ xi)))


@dataclass(frozen=True)
class AdmConfig:
    max_iters: int = 1000
    tol: float = 1e-6
    n_initializations: int = 64
    seed: int = 0
    l1_rounding: bool = True


@dataclass(frozen=True)
class SparseCoefficients:
    xi: np.ndarray
    lam: float
    residual: float
    converged: bool = True
    n_iters: int = 0
    error: str | None = None

    @property
    def active(self) -> np.ndarray:
        return self.xi != 0

    @property
    def term_count(self) -> int:
        return int(np.count_nonzero(self.xi))

    def to_dict(self) -> dict:
        d = {
            "lambda": float(self.lam),
            "term_count": self.term_count,
            "residual": float(self.residual),
            "xi": [float(v) for v in self.xi],
            "converged": bool(self.converged),
        }
        if self.error:
            d["error"] = self.error
        return d

    @classmethod
    def from_dict(cls, d) -> "SparseCoefficients":
        return cls(np.asarray(d["xi"], dtype=float), float(d["lambda"]), float(d["residual"]),
                   bool(d.get("converged", True)), 0, d.get("error"))


def _triangular_factor(M: np.ndarray, block_rows: int) -> np.ndarray:
    """R of a QR factorization of a tall matrix, accumulated block by block."""
    p = M.shape[1]
    step = max(block_rows, p)
    R = None
    for start in range(0, M.shape[0], step):
        block = M[start:start + step]
        stacked = block if R is None else np.vstack([R, block])
        R = np.linalg.qr(stacked, mode="r")
    return R


def null_space_basis(theta, rank_tol_rel: float = 1e-8, block_rows: int = 4096) -> NullSpaceBasis:
    """Right singular vectors of ``theta`` with singular value <= ``rank_tol_rel * sigma_max``.

    Tall matrices are reduced to their triangular QR factor first (same
    singular values and right singular vectors, far less memory).
    """
    lib = theta if isinstance(theta, EvaluatedLibrary) else None
    M = lib.matrix if lib is not None else np.asarray(theta, dtype=float)
    if M.ndim != 2:
        raise DimensionMismatch("library matrix must be 2-D")
    m, p = M.shape
    if lib is not None and not lib.is_normalized:
        warnings.warn("library columns are not normalized", UserWarning, stacklevel=2)
    if m < p:
        warnings.warn(f"underdetermined library ({m} rows < {p} columns)", UnderdeterminedLibrary, stacklevel=2)
    try:
        R = _triangular_factor(M, block_rows) if m > 2 * p else M
        _, s, Vt = np.linalg.svd(R, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD failed: {exc}") from exc
    if not np.all(np.isfinite(s)):
        raise NumericalFailure("non-finite singular values")
    smax = s[0] if len(s) else 0.0
    tol = rank_tol_rel * smax
    null = np.concatenate([np.flatnonzero(s <= tol), np.arange(len(s), p)]).astype(int)
    if len(null) == 0:
        raise EmptyNullSpace(
            f"no singular value below {rank_tol_rel:g} * sigma_max "
            f"(smallest relative value {s[-1] / smax:.3e}); the library may lack the true terms"
        )
    full_s = np.concatenate([s, np.zeros(p - len(s))])
    sign_mask = lib.denominator_mask if lib is not None and lib.mode != "explicit" else None
    return NullSpaceBasis(Vt[null].T.copy(), full_s, tol, M, sign_mask)


def soft_threshold(v, lam: float) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def _fix_sign(xi: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    idx = np.flatnonzero(xi)
    if mask is not None and np.any(mask[idx]):
        idx = idx[mask[idx]]
    if len(idx) == 0:
        return xi
    j = idx[np.argmax(np.abs(xi[idx]))]
    return -xi if xi[j] < 0 else xi


def _polish(N: np.ndarray, support: np.ndarray, lam: float, max_rounds: int = 5) -> np.ndarray:
    """Unit vector in span(N) with the least mass off ``support``, then zeroed off it.

    Entries that fall below ``lam`` after the projection leave the support
    and the projection is repeated.
    """
    support = support.copy()
    xi = np.zeros(N.shape[0])
    for _ in range(max_rounds):
        off = ~support
        if not np.any(off):
            q = np.linalg.svd(N, full_matrices=False)[2][0]
        else:
            sub = N[off]
            q = np.linalg.svd(sub, full_matrices=sub.shape[0] < sub.shape[1])[2][-1]
        xi = N @ q
        xi[off] = 0.0
        nrm = np.linalg.norm(xi)
        if nrm == 0:
            return xi
        xi /= nrm
        keep = np.abs(xi) >= lam
        if np.array_equal(keep, support) or not np.any(keep):
            break
        support = keep
    xi[np.abs(xi) < lam] = 0.0
    nrm = np.linalg.norm(xi)
    return xi / nrm if nrm > 0 else xi


def _round_l1(N: np.ndarray, r: np.ndarray, max_iters: int = 60) -> np.ndarray | None:
    """Approximate ``argmin ||N q||_1`` subject to ``<r, q> = 1``; returns ``N q`` normalized.

    Removes the shrinkage bias of the ADM fixed point: when ``r`` is close
    enough to a sparse vector in span(N), the minimizer is that vector.
    Solved by iteratively reweighted least squares with a shrinking floor
    on the weights; only the support of the result is used downstream.
    """
    p, k = N.shape
    if k == 1:
        return N[:, 0].copy()
    v = N @ r
    delta = 0.1 * np.abs(v).max()
    if delta == 0:
        return None
    for _ in range(max_iters):
        w = 1.0 / np.maximum(np.abs(v), delta)
        M = N.T @ (w[:, None] * N)
        try:
            s = np.linalg.solve(M, r)
        except np.linalg.LinAlgError:
            s = np.linalg.lstsq(M, r, rcond=None)[0]
        denom = r @ s
        if not np.isfinite(denom) or denom == 0:
            break
        v_new = N @ (s / denom)
        done = np.linalg.norm(v_new - v) <= 1e-12 * np.linalg.norm(v)
        v = v_new
        if done:
            break
        delta = max(0.5 * delta, 1e-14 * np.abs(v).max())
    nrm = np.linalg.norm(v)
    return v / nrm if nrm > 0 and np.isfinite(nrm) else None


def _initial_directions(N: np.ndarray, count: int, seed: int) -> np.ndarray:
    """Normalized rows of N, largest norm first; seeded random unit vectors fill any shortfall."""
    norms = np.linalg.norm(N, axis=1)
    order = np.argsort(-norms, kind="stable")
    order = order[norms[order] > 1e-12][:count]
    Q = (N[order] / norms[order, None]).T
    if Q.shape[1] < count:
        rng = np.random.default_rng(seed)
        extra = rng.standard_normal((N.shape[1], count - Q.shape[1]))
        Q = np.hstack([Q, extra / np.linalg.norm(extra, axis=0)])
    return Q


def adm_sparsest_vector(ns: NullSpaceBasis, lam: float, cfg: AdmConfig | None = None) -> SparseCoefficients:
    """Sparsest unit vector in span(N) reachable by alternating directions.

    Each run alternates ``x = soft_threshold(N q, lam)`` and
    ``q = N^T x / ||N^T x||`` from one starting direction. The run whose
    ``N q`` has the fewest entries of magnitude >= ``lam`` wins (ties go to
    the smaller residual). Its support is then polished: the vector in
    span(N) with least mass off the support is taken, zeroed off it and
    renormalized.
    """
    cfg = cfg or AdmConfig()
    N = ns.basis
    p, r = N.shape
    if r < 1:
        raise EmptyNullSpace("null-space basis is empty")
    Q = _initial_directions(N, min(cfg.n_initializations, p), cfg.seed)
    k = Q.shape[1]
    running = np.ones(k, dtype=bool)
    converged = np.zeros(k, dtype=bool)
    dead = np.zeros(k, dtype=bool)
    iters = np.zeros(k, dtype=int)
    for _ in range(cfg.max_iters):
        idx = np.flatnonzero(running)
        if len(idx) == 0:
            break
        X = soft_threshold(N @ Q[:, idx], lam)
        G = N.T @ X
        gn = np.linalg.norm(G, axis=0)
        zero = gn == 0
        dead[idx[zero]] = True
        running[idx[zero]] = False
        live = idx[~zero]
        Qn = G[:, ~zero] / gn[~zero]
        delta = np.linalg.norm(Qn - Q[:, live], axis=0)
        Q[:, live] = Qn
        iters[live] += 1
        done = delta < cfg.tol
        converged[live[done]] = True
        running[live[done]] = False

    V = N @ Q
    support = np.abs(V) >= lam
    support[:, dead] = False
    counts = support.sum(axis=0)
    usable = np.flatnonzero(counts > 0)
    if len(usable) == 0:
        raise DegenerateLambda(f"lambda={lam:g} thresholds every run to zero")

    best = None
    cache: dict = {}
    for j in usable:
        key = support[:, j].tobytes()
        if key not in cache:
            xi = _polish(N, support[:, j], lam)
            res = ns.residual(xi)
            if cfg.l1_rounding and not res <= ns.residual_floor:
                rounded = _round_l1(N, Q[:, j])
                if rounded is not None and np.any(np.abs(rounded) >= lam):
                    xi_lp = _polish(N, np.abs(rounded) >= lam, lam)
                    res_lp = ns.residual(xi_lp)
                    if (res_lp > ns.residual_floor, np.count_nonzero(xi_lp), res_lp) < \
                            (res > ns.residual_floor, np.count_nonzero(xi), res):
                        xi, res = xi_lp, res_lp
            cache[key] = (xi, res)
        xi, res = cache[key]
        tc = int(np.count_nonzero(xi))
        if tc == 0:
            continue
        rank = (res > ns.residual_floor, tc, res)
        if best is None or rank < best[0]:
            best = (rank, j, xi)
    if best is None:
        raise DegenerateLambda(f"lambda={lam:g} thresholds every run to zero")
    (_, _, res), j, xi = best
    if not np.any(converged):
        warnings.warn(f"ADM hit max_iters={cfg.max_iters} in every run (lambda={lam:g})", NoConvergence,
                      stacklevel=2)
    xi = _fix_sign(xi, ns.sign_mask)
    return SparseCoefficients(xi, float(lam), float(res), bool(converged[j]), int(iters[j]))


def lambda_sweep(ns: NullSpaceBasis, lambda_grid, cfg: AdmConfig | None = None) -> list[SparseCoefficients]:
    """One ADM result per threshold, in grid order; failures come back flagged."""
    grid = np.asarray(lambda_grid, dtype=float).ravel()
    if len(grid) == 0:
        raise ValueError("lambda grid is empty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("lambda grid must be sorted ascending")
    out = []
    for lam in grid:
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", NoConvergence)
                res = adm_sparsest_vector(ns, lam, cfg)
            if any(issubclass(w.category, NoConvergence) for w in caught):
                res = SparseCoefficients(res.xi, res.lam, res.residual, False, res.n_iters, "NoConvergence")
        except DegenerateLambda as exc:
            res = SparseCoefficients(np.zeros(ns.basis.shape[0]), float(lam), np.inf, False, 0,
                                     f"DegenerateLambda: {exc}")
        out.append(res)
    return out


# -- explicit sparse regression ---------------------------------------------


def _unpack(theta) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(theta, EvaluatedLibrary):
        return theta.matrix, theta.column_scales
    M = np.asarray(theta, dtype=float)
    return M, np.ones(M.shape[1])


def stlsq(theta, xdot, lam: float, max_iters: int = 25) -> SparseCoefficients:
    """Sequentially thresholded least squares for ``xdot ~ Theta xi``.

    Thresholding applies to raw (unscaled) coefficients; returned ``xi`` is
    raw as well.
    """
    M, scales = _unpack(theta)
    y = np.asarray(xdot, dtype=float).ravel()
    if M.shape[0] != len(y):
        raise DimensionMismatch(f"{M.shape[0]} library rows but {len(y)} derivative samples")
    m, p = M.shape
    active = np.ones(p, dtype=bool)
    coef = np.zeros(p)
    for _ in range(max_iters):
        cols = np.flatnonzero(active)
        sol, _, rank, _ = np.linalg.lstsq(M[:, cols], y, rcond=None)
        if rank < len(cols):
            raise RankDeficientActiveSet(f"active set of {len(cols)} columns has rank {rank}")
        coef = np.zeros(p)
        coef[cols] = sol / scales[cols]
        keep = np.abs(coef) >= lam
        if not np.any(keep):
            raise AllTermsEliminated(f"every coefficient fell below lambda={lam:g}")
        if np.array_equal(keep, active):
            break
        active = keep
    coef[~active] = 0.0
    resid = np.linalg.norm((M * scales) @ coef - y) / np.sqrt(m) if m else 0.0
    return SparseCoefficients(coef, float(lam), float(resid))


def lasso_cd(theta, xdot, lam: float, max_iters: int = 10_000, tol: float = 1e-10) -> SparseCoefficients:
    """Coordinate-descent LASSO, ``min (1/2m)||xdot - Theta xi||^2 + lam ||xi||_1``.

    Solved in the library's own column scaling; ``xi`` is returned raw.
    """
    M, scales = _unpack(theta)
    y = np.asarray(xdot, dtype=float).ravel()
    if M.shape[0] != len(y):
        raise DimensionMismatch(f"{M.shape[0]} library rows but {len(y)} derivative samples")
    m, p = M.shape
    col_sq = np.einsum("ij,ij->j", M, M) / m
    w = np.zeros(p)
    r = y.copy()
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        max_step = 0.0
        for j in range(p):
            if col_sq[j] == 0:
                continue
            old = w[j]
            rho = M[:, j] @ r / m + col_sq[j] * old
            new = np.sign(rho) * max(abs(rho) - lam, 0.0) / col_sq[j]
            if new != old:
                r -= M[:, j] * (new - old)
                w[j] = new
                max_step = max(max_step, abs(new - old))
        if max_step < tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"coordinate descent hit max_iters={max_iters}", NoConvergence, stacklevel=2)
    coef = w / scales
    resid = np.linalg.norm(r) / np.sqrt(m) if m else 0.0
    return SparseCoefficients(coef, float(lam), float(resid), converged, it)
