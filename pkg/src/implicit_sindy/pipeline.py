"""Per-state identification: library, null space, lambda sweep, knee, model."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .dynamics import Dataset, RationalStateModel
from .errors import NoCliff, NoDenominatorTerms, SindyError
from .library import LibrarySpec, build_explicit_library, build_implicit_library
from .selection import (
    IdentifiedModel,
    ParetoFront,
    assemble_rational_model,
    find_knee,
    pareto_front,
)
from .sparse import SparseCoefficients, lambda_sweep, null_space_basis, stlsq


@dataclass
class StateResult:
    state_index: int
    method: str
    model: RationalStateModel | None
    library: LibrarySpec | None = None
    n_samples: int = 0
    n_trajectories: int = 0
    null_dim: int | None = None
    sweep: list = field(default_factory=list)
    front: ParetoFront | None = None
    chosen: SparseCoefficients | None = None
    cliff_decades: float | None = None
    warnings: list = field(default_factory=list)
    error: str | None = None
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.model is not None

    def provenance(self) -> dict:
        out = {
            "state": f"x{self.state_index + 1}",
            "method": self.method,
            "library": self.library.to_dict() if self.library else None,
            "n_samples": self.n_samples,
            "n_trajectories": self.n_trajectories,
            "null_dim": self.null_dim,
            "lambda": self.chosen.lam if self.chosen else None,
            "residual": self.chosen.residual if self.chosen else None,
            "term_count": self.chosen.term_count if self.chosen else None,
            "cliff_decades": self.cliff_decades,
            "warnings": list(self.warnings),
            "error": self.error,
        }
        return out


def _identify_explicit(X, y, k, cfg: RunConfig, res: StateResult) -> StateResult:
    lib = build_explicit_library(X, cfg.explicit_degree, normalize=True)
    sol = stlsq(lib, y, cfg.explicit_lambda)
    coeffs = {t.exponents: c for t, c in zip(lib.terms, sol.xi) if c != 0}
    res.method = "explicit"
    res.library = LibrarySpec("explicit", cfg.explicit_degree)
    res.chosen = sol
    res.model = RationalStateModel.polynomial(k, coeffs, X.shape[1])
    return res


def identify_state(dataset: Dataset, k: int, cfg: RunConfig) -> StateResult:
    """Identify ``x_k' = f_N / f_D`` (or a polynomial) for one state.

    Uses the first ``cfg.n_ics`` trajectories (after per-state overrides).
    Failures are recorded on the result rather than raised.
    """
    t0 = time.perf_counter()
    cfg = cfg.for_state(k)
    data = dataset.subset(len(cfg.ics) if cfg.ics is not None else cfg.n_ics)
    X, Xdot = data.stacked_states, data.stacked_derivs
    res = StateResult(k, cfg.method, None, n_samples=len(X), n_trajectories=len(data))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            if cfg.method == "explicit":
                _identify_explicit(X, Xdot[:, k], k, cfg, res)
            else:
                spec = LibrarySpec("implicit", cfg.d_num, cfg.d_den, k)
                lib = build_implicit_library(X, Xdot[:, k], spec.d_num, spec.d_den, k, normalize=True)
                ns = null_space_basis(lib, cfg.rank_tol_rel)
                res.library, res.null_dim = spec, ns.dim
                res.method = "implicit"
                res.sweep = lambda_sweep(ns, cfg.lambda_grid(), cfg.adm())
                res.front = pareto_front(res.sweep)
                knee = find_knee(res.front, cfg.drop_threshold, ns.residual_floor)
                res.chosen = res.front.points[knee.index].coefficients
                res.cliff_decades = knee.cliff_decades
                try:
                    model = assemble_rational_model(res.chosen, lib, cfg.prune_tol, k)
                except NoDenominatorTerms:
                    if cfg.method != "auto":
                        raise
                    model = None
                if model is not None and not (cfg.method == "auto" and model.is_polynomial):
                    res.model = model
                else:
                    del lib, ns
                    _identify_explicit(X, Xdot[:, k], k, cfg, res)
        except SindyError as exc:
            res.error = f"{type(exc).__name__}: {exc}"
    res.warnings = [f"{w.category.__name__}: {w.message}" for w in caught]
    res.seconds = time.perf_counter() - t0
    return res


def identify_dataset(dataset: Dataset, cfg: RunConfig, states=None) -> tuple[IdentifiedModel | None, list]:
    """Run :func:`identify_state` for each requested state (0-based indices)."""
    n = dataset.n_states
    if states is None:
        states = range(n) if cfg.states is None else [int(str(s).lstrip("x")) - 1 for s in cfg.states]
    results = [identify_state(dataset, k, cfg) for k in states]
    if len(results) == n and all(r.ok for r in results):
        model = IdentifiedModel(tuple(r.model for r in results), tuple(r.provenance() for r in results),
                                name=cfg.benchmark or "identified")
    else:
        model = None
    return model, results


def has_no_cliff(result: StateResult) -> bool:
    return any(w.startswith(NoCliff.__name__) for w in result.warnings)
