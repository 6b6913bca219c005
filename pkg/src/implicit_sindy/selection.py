"""Pareto-front model selection and assembly of identified rational models."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import polynomial as P
from .dynamics import IntegratorConfig, OdeModel, RationalStateModel, simulate
from .errors import (
    DegreeOverflow,
    DimensionMismatch,
    EmptyFront,
    IntegrationFailure,
    NoCliff,
    NoDenominatorTerms,
    NoValidCandidates,
)
from .library import EvaluatedLibrary, LibrarySpec, library_terms
from .sparse import SparseCoefficients


@dataclass(frozen=True)
class ParetoPoint:
    term_count: int
    residual: float
    lam: float
    coefficients: SparseCoefficients


@dataclass(frozen=True)
class ParetoFront:
    points: tuple

    def __len__(self) -> int:
        return len(self.points)

    @property
    def term_counts(self) -> list[int]:
        return [p.term_count for p in self.points]

    @property
    def residuals(self) -> np.ndarray:
        return np.array([p.residual for p in self.points])

    def to_rows(self) -> list[tuple[float, int, float]]:
        return [(p.lam, p.term_count, p.residual) for p in self.points]


def pareto_front(candidates: Sequence[SparseCoefficients]) -> ParetoFront:
    """Minimal residual per term count, keeping only non-dominated points."""
    valid = [c for c in candidates if c.term_count > 0 and np.isfinite(c.residual)
             and not (c.error or "").startswith("DegenerateLambda")]
    if not valid or not any(c.converged for c in valid):
        raise NoValidCandidates("no converged candidate with at least one active term")
    best: dict[int, SparseCoefficients] = {}
    for c in valid:
        cur = best.get(c.term_count)
        if cur is None or c.residual < cur.residual:
            best[c.term_count] = c
    points = []
    floor = np.inf
    for tc in sorted(best):
        c = best[tc]
        if c.residual < floor:
            points.append(ParetoPoint(tc, float(c.residual), float(c.lam), c))
            floor = c.residual
    return ParetoFront(tuple(points))


@dataclass(frozen=True)
class Knee:
    index: int
    cliff_decades: float
    no_cliff: bool


def find_knee(front: ParetoFront, drop_threshold: float = 2.0, residual_floor: float = 0.0) -> Knee:
    """Index of the sparsest point right after a residual drop of ``drop_threshold`` decades.

    The point must also be within a factor 10 of the smallest residual on
    the front. Residuals are clamped at ``residual_floor`` first, so values
    that are all numerically zero compare equal.
    """
    if len(front) == 0:
        raise EmptyFront("Pareto front has no points")
    tiny = np.finfo(float).tiny
    res = np.maximum(front.residuals, max(residual_floor, tiny))
    logs = np.log10(res)
    best = float(res.min())
    drops = np.concatenate([[0.0], logs[:-1] - logs[1:]])
    if len(front) == 1:
        warnings.warn("single-point Pareto front; returning it", NoCliff, stacklevel=2)
        return Knee(0, 0.0, True)
    for i in range(1, len(front)):
        if drops[i] >= drop_threshold and res[i] <= 10 * best:
            return Knee(i, float(drops[i]), False)
    i = int(np.argmin(res))
    warnings.warn(
        f"no residual drop of {drop_threshold:g} decades (largest {drops.max():.2f}); "
        f"returning the minimum-residual point with {front.points[i].term_count} terms",
        NoCliff,
        stacklevel=2,
    )
    return Knee(i, float(drops[i]), True)


def select_knee(front: ParetoFront, drop_threshold: float = 2.0, residual_floor: float = 0.0) -> SparseCoefficients:
    return front.points[find_knee(front, drop_threshold, residual_floor).index].coefficients


def _prune(block: dict, scaled: dict, tol: float) -> dict:
    if not block or tol <= 0:
        return block
    top = max(abs(v) for v in scaled.values())
    return {e: c for e, c in block.items() if abs(scaled[e]) >= tol * top}


def assemble_rational_model(xi, lib: EvaluatedLibrary, prune_tol: float = 1e-6,
                            state_index: int | None = None) -> RationalStateModel:
    """Turn a null vector of an implicit library into ``x_k' = f_N / f_D``.

    ``xi`` is in the library's normalized coordinates. Coefficients below
    ``prune_tol`` times the largest same-block coefficient (also measured in
    normalized coordinates) are dropped, the whole numerator goes when it is
    below ``prune_tol`` times the largest entry overall, a monomial factor shared by every
    remaining term is cancelled, and the result is normalized so the
    denominator constant is 1.
    """
    vec = np.asarray(getattr(xi, "xi", xi), dtype=float)
    if len(vec) != len(lib.terms):
        raise DimensionMismatch(f"xi has {len(vec)} entries, library has {len(lib.terms)} terms")
    if any(t.deriv_power > 1 or t.trig is not None for t in lib.terms):
        raise ValueError("assemble_rational_model needs an implicit library (derivative powers 0 or 1)")
    raw = vec / lib.column_scales
    num, den, num_s, den_s = {}, {}, {}, {}
    for t, c, s in zip(lib.terms, raw, vec):
        if c == 0:
            continue
        if t.deriv_power == 0:
            num[t.exponents], num_s[t.exponents] = c, s
        else:
            den[t.exponents], den_s[t.exponents] = -c, s
    k = state_index if state_index is not None else (lib.terms[0].deriv_index if lib.terms else 0)
    if not den:
        raise NoDenominatorTerms("no active denominator terms; the state may be polynomial")
    overall = np.abs(vec).max()
    if num and prune_tol > 0 and max(abs(v) for v in num_s.values()) < prune_tol * overall:
        num = {}
    num = _prune(num, num_s, prune_tol)
    den = _prune(den, den_s, prune_tol)
    if not num:
        warnings.warn(f"state {k}: every numerator term pruned; model is x' = 0", UserWarning, stacklevel=2)
    common = P.common_monomial(num, den)
    if common is not None and any(common):
        num, den = P.divide_monomial(num, common), P.divide_monomial(den, common)
    return RationalStateModel(k, num, den).normalized()


def implicit_coefficients(model: OdeModel, state_index: int, lib_spec: LibrarySpec,
                          column_scales=None) -> np.ndarray:
    """Exact null vector ``[f_N, -f_D]`` of a known model in library coordinates.

    Scaled by ``column_scales`` (normalized-library coordinates), unit
    2-norm, sign fixed so the largest denominator entry is positive.
    """
    s = model.rhs[state_index]
    n = model.n_states
    if lib_spec.mode == "explicit":
        raise ValueError("implicit_coefficients needs an implicit or mixed library spec")
    d_num, d_den = lib_spec.d_num, lib_spec.d_den
    if lib_spec.mode == "mixed":
        d_den = d_num
    if P.degree(s.numerator) > d_num or P.degree(s.denominator) > d_den:
        raise DegreeOverflow(
            f"state {state_index}: numerator degree {P.degree(s.numerator)} / denominator degree "
            f"{P.degree(s.denominator)} exceed library degrees {d_num} / {d_den}"
        )
    terms = library_terms(lib_spec, n)
    xi = np.zeros(len(terms))
    for j, t in enumerate(terms):
        if t.deriv_power == 0:
            xi[j] = s.numerator.get(t.exponents, 0.0)
        elif t.deriv_power == 1:
            xi[j] = -s.denominator.get(t.exponents, 0.0)
    if column_scales is not None:
        xi = xi * np.asarray(column_scales, dtype=float)
    xi /= np.linalg.norm(xi)
    mask = np.array([t.deriv_power > 0 for t in terms])
    idx = np.flatnonzero(mask & (xi != 0))
    if len(idx) and xi[idx[np.argmax(np.abs(xi[idx]))]] < 0:
        xi = -xi
    return xi


@dataclass(frozen=True)
class IdentifiedModel:
    states: tuple
    provenance: tuple = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "provenance", tuple(self.provenance))

    @property
    def n_states(self) -> int:
        return len(self.states)

    def to_ode_model(self) -> OdeModel:
        return OdeModel(self.n_states, self.states, {}, self.name)

    def to_dict(self) -> dict:
        d = self.to_ode_model().to_dict()
        d["provenance"] = [dict(p) for p in self.provenance]
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "IdentifiedModel":
        m = OdeModel.from_dict(d)
        return cls(m.rhs, tuple(d.get("provenance", ())), m.name)


def _relative(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b != 0 else abs(a - b)


def validate_model(identified, truth: OdeModel, test_ics, t_grid, cfg: IntegratorConfig | None = None,
                   benchmark: str | None = None) -> dict:
    """Simulate identified and true models from held-out initial conditions and compare.

    Trajectory error per state is ``max |x_id - x_true| / max |x_true|``.
    Parameter errors need a ``benchmark`` name with a declared parameter
    correspondence.
    """
    from .benchmarks import extract_parameters

    model = identified.to_ode_model() if isinstance(identified, IdentifiedModel) else identified
    if model.n_states != truth.n_states:
        raise DimensionMismatch("identified and true models have different state counts")
    rows = []
    worst = np.zeros(truth.n_states)
    for ic in np.asarray(test_ics, dtype=float).reshape(-1, truth.n_states):
        ref = simulate(truth, ic, t_grid, cfg)
        try:
            est = simulate(model, ic, t_grid, cfg)
        except IntegrationFailure as exc:
            rows.append({"ic": ic.tolist(), "diverged": True, "error": str(exc), "max_rel_error": None})
            worst[:] = np.inf
            continue
        scale = np.maximum(np.abs(ref.states).max(axis=0), np.finfo(float).tiny)
        err = np.abs(est.states - ref.states).max(axis=0) / scale
        worst = np.maximum(worst, err)
        rows.append({"ic": ic.tolist(), "diverged": False, "error": None, "max_rel_error": err.tolist()})
    report = {
        "trajectories": rows,
        "max_rel_error_by_state": worst.tolist(),
        "parameters": [],
        "max_param_rel_error": None,
    }
    if benchmark is not None:
        states = model.rhs if not isinstance(identified, IdentifiedModel) else identified.states
        extracted = extract_parameters(benchmark, states)
        table = []
        for name, true in truth.param_labels.items():
            got = extracted.get(name, np.nan)
            table.append({"name": name, "true": float(true), "extracted": float(got),
                          "rel_error": float(_relative(got, true)) if np.isfinite(got) else None})
        report["parameters"] = table
        errs = [r["rel_error"] for r in table]
        report["max_param_rel_error"] = None if any(e is None for e in errs) else float(max(errs, default=0.0))
    return report
