"""Candidate-function libraries: explicit, implicit (numerator and
derivative-weighted denominator blocks) and mixed state/derivative.

Term order is fixed: graded-lexicographic within a block (constant first,
then ``x1 > x2 > ...`` within each degree), numerator block before
denominator block. Coefficient vectors are indexed against this order.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from itertools import combinations, combinations_with_replacement
from math import comb, log10
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyData, ZeroColumn

MODES = ("explicit", "implicit", "mixed")


def count_monomials(n: int, d: int) -> int:
    """Number of monomials in ``n`` variables of degree at most ``d``."""
    return comb(n + d, d)


def count_polynomial_structures(n: int, d: int) -> tuple[int, int]:
    """Nonempty subsets of the ``count_monomials(n, d)`` monomials.

    Returns the exact count ``2**N_m - 1`` and its base-10 magnitude.
    """
    nm = count_monomials(n, d)
    count = 2**nm - 1
    return count, len(str(count)) - 1


def enumerate_monomials(n: int, d: int) -> list[tuple[int, ...]]:
    out = []
    for deg in range(d + 1):
        for combo in combinations_with_replacement(range(n), deg):
            e = [0] * n
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


@dataclass(frozen=True)
class LibraryTerm:
    """``prod(x**exponents) * (xdot[deriv_index] ** deriv_power)``, or a trig column."""

    exponents: tuple
    deriv_power: int = 0
    deriv_index: int = 0
    trig: tuple | None = None  # (kind, state, frequency)

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    def name(self) -> str:
        if self.trig is not None:
            kind, i, w = self.trig
            return f"{kind}({w:g}*x{i + 1})"
        parts = []
        if self.deriv_power:
            d = f"dx{self.deriv_index + 1}"
            parts.append(d if self.deriv_power == 1 else f"{d}^{self.deriv_power}")
        for i, v in enumerate(self.exponents):
            if v:
                parts.append(f"x{i + 1}" if v == 1 else f"x{i + 1}^{v}")
        return "*".join(parts) or "1"

    def evaluate(self, X: np.ndarray, Xdot: np.ndarray | None = None) -> np.ndarray:
        """Direct per-sample evaluation (slow path, used as a cross-check)."""
        X = np.atleast_2d(X)
        if self.trig is not None:
            kind, i, w = self.trig
            return getattr(np, kind)(w * X[:, i])
        col = np.prod(X ** np.asarray(self.exponents), axis=1)
        if self.deriv_power:
            col = col * Xdot[:, self.deriv_index] ** self.deriv_power
        return col

    def to_dict(self) -> dict:
        d = {"exponents": list(self.exponents), "deriv_power": self.deriv_power, "deriv_index": self.deriv_index}
        if self.trig is not None:
            d["trig"] = list(self.trig)
        return d

    @classmethod
    def from_dict(cls, d) -> "LibraryTerm":
        trig = tuple(d["trig"]) if d.get("trig") else None
        return cls(tuple(int(v) for v in d["exponents"]), int(d.get("deriv_power", 0)),
                   int(d.get("deriv_index", 0)), trig)


@dataclass(frozen=True)
class LibrarySpec:
    mode: str = "implicit"
    d_num: int = 4
    d_den: int | None = None
    deriv_index: int = 0
    include_trig: bool = False
    frequencies: tuple = ()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.d_den is None:
            object.__setattr__(self, "d_den", self.d_num)
        object.__setattr__(self, "frequencies", tuple(float(f) for f in self.frequencies))
        if self.include_trig and not self.frequencies:
            raise ValueError("include_trig requires explicit frequencies")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["frequencies"] = list(self.frequencies)
        return d

    @classmethod
    def from_dict(cls, d) -> "LibrarySpec":
        return cls(**{k: d[k] for k in ("mode", "d_num", "d_den", "deriv_index", "include_trig", "frequencies") if k in d})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def library_terms(spec: LibrarySpec, n: int) -> list[LibraryTerm]:
    """Symbolic term list for ``spec`` over ``n`` states (no data needed).

    For mixed mode ``d_num`` is the state degree and ``d_den`` the highest
    derivative power.
    """
    k = spec.deriv_index
    if spec.mode == "explicit":
        terms = [LibraryTerm(e) for e in enumerate_monomials(n, spec.d_num)]
        if spec.include_trig:
            zero = (0,) * n
            for w in spec.frequencies:
                for i in range(n):
                    terms.append(LibraryTerm(zero, trig=("sin", i, w)))
                    terms.append(LibraryTerm(zero, trig=("cos", i, w)))
        return terms
    if spec.mode == "implicit":
        return [LibraryTerm(e, 0, k) for e in enumerate_monomials(n, spec.d_num)] + [
            LibraryTerm(e, 1, k) for e in enumerate_monomials(n, spec.d_den)
        ]
    monos = enumerate_monomials(n, spec.d_num)
    return [LibraryTerm(e, q, k) for q in range(spec.d_den + 1) for e in monos]


@dataclass(frozen=True)
class EvaluatedLibrary:
    matrix: np.ndarray
    terms: tuple
    column_scales: np.ndarray
    mode: str

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.matrix.shape[1] != len(self.terms):
            raise DimensionMismatch("matrix columns and terms disagree")

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def denominator_mask(self) -> np.ndarray:
        """Columns carrying a derivative factor."""
        return np.array([t.deriv_power > 0 for t in self.terms], dtype=bool)

    @property
    def is_normalized(self) -> bool:
        return not np.all(self.column_scales == 1.0)

    def names(self) -> list[str]:
        return [t.name() for t in self.terms]

    def unscale(self) -> "EvaluatedLibrary":
        return EvaluatedLibrary(self.matrix * self.column_scales, self.terms,
                                np.ones(len(self.terms)), self.mode)

    @classmethod
    def symbolic(cls, spec: LibrarySpec, n: int) -> "EvaluatedLibrary":
        """A library with terms and unit scales but no data rows."""
        terms = library_terms(spec, n)
        return cls(np.zeros((0, len(terms))), tuple(terms), np.ones(len(terms)), spec.mode)


def _monomial_block(X: np.ndarray, monos: Sequence[tuple], out: np.ndarray) -> None:
    """Fill ``out[:, j]`` with monomial j, each built from an earlier column times one state."""
    index = {e: j for j, e in enumerate(monos)}
    for j, e in enumerate(monos):
        if sum(e) == 0:
            out[:, j] = 1.0
            continue
        i = max(i for i, v in enumerate(e) if v)
        parent = list(e)
        parent[i] -= 1
        parent = tuple(parent)
        if parent in index:
            np.multiply(out[:, index[parent]], X[:, i], out=out[:, j])
        else:
            out[:, j] = np.prod(X ** np.asarray(e), axis=1)


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise EmptyData("data matrix has no rows")
    return X


def build_explicit_library(X, d: int, include_trig: bool = False, frequencies: Sequence[float] = (),
                           normalize: bool = False) -> EvaluatedLibrary:
    X = _as_matrix(X)
    m, n = X.shape
    spec = LibrarySpec("explicit", d, d, 0, include_trig, tuple(frequencies))
    terms = library_terms(spec, n)
    monos = enumerate_monomials(n, d)
    out = np.empty((m, len(terms)))
    _monomial_block(X, monos, out[:, :len(monos)])
    for j, t in enumerate(terms[len(monos):], start=len(monos)):
        out[:, j] = t.evaluate(X)
    lib = EvaluatedLibrary(out, tuple(terms), np.ones(len(terms)), "explicit")
    return _normalize_inplace(lib) if normalize else lib


def build_implicit_library(X, xdot_k, d_num: int, d_den: int | None = None, deriv_index: int = 0,
                           normalize: bool = False) -> EvaluatedLibrary:
    """``[Theta_N(X), diag(xdot_k) Theta_D(X)]``."""
    X = _as_matrix(X)
    xdot_k = np.asarray(xdot_k, dtype=float).ravel()
    if len(xdot_k) != X.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} state rows but {len(xdot_k)} derivative samples")
    d_den = d_num if d_den is None else d_den
    m, n = X.shape
    terms = library_terms(LibrarySpec("implicit", d_num, d_den, deriv_index), n)
    num = enumerate_monomials(n, d_num)
    den = enumerate_monomials(n, d_den)
    out = np.empty((m, len(num) + len(den)))
    _monomial_block(X, num, out[:, :len(num)])
    if d_den <= d_num:
        # denominator monomials are a prefix of the numerator list
        np.multiply(out[:, :len(den)], xdot_k[:, None], out=out[:, len(num):])
    else:
        _monomial_block(X, den, out[:, len(num):])
        out[:, len(num):] *= xdot_k[:, None]
    lib = EvaluatedLibrary(out, tuple(terms), np.ones(len(terms)), "implicit")
    return _normalize_inplace(lib) if normalize else lib


def build_mixed_library(X, Xdot, d_state: int, d_deriv: int, deriv_index: int = 0,
                        normalize: bool = False) -> EvaluatedLibrary:
    """Products ``monomial(x) * xdot_k**q`` for degree <= d_state and q <= d_deriv."""
    X = _as_matrix(X)
    Xdot = _as_matrix(Xdot)
    if Xdot.shape[0] != X.shape[0]:
        raise DimensionMismatch("state and derivative matrices have different row counts")
    if not 0 <= deriv_index < Xdot.shape[1]:
        raise DimensionMismatch(f"deriv_index {deriv_index} out of range")
    m, n = X.shape
    terms = library_terms(LibrarySpec("mixed", d_state, d_deriv, deriv_index), n)
    monos = enumerate_monomials(n, d_state)
    k = len(monos)
    out = np.empty((m, len(terms)))
    _monomial_block(X, monos, out[:, :k])
    xd = Xdot[:, deriv_index]
    for q in range(1, d_deriv + 1):
        np.multiply(out[:, (q - 1) * k:q * k], xd[:, None], out=out[:, q * k:(q + 1) * k])
    lib = EvaluatedLibrary(out, tuple(terms), np.ones(len(terms)), "mixed")
    return _normalize_inplace(lib) if normalize else lib


def build_library(spec: LibrarySpec, X, Xdot=None, normalize: bool = False) -> EvaluatedLibrary:
    if spec.mode == "explicit":
        return build_explicit_library(X, spec.d_num, spec.include_trig, spec.frequencies, normalize)
    Xdot = _as_matrix(Xdot)
    if spec.mode == "implicit":
        return build_implicit_library(X, Xdot[:, spec.deriv_index], spec.d_num, spec.d_den,
                                      spec.deriv_index, normalize)
    return build_mixed_library(X, Xdot, spec.d_num, spec.d_den, spec.deriv_index, normalize)


def _column_norms(lib: EvaluatedLibrary) -> np.ndarray:
    norms = np.linalg.norm(lib.matrix, axis=0)
    zero = np.flatnonzero(norms == 0)
    if len(zero):
        names = ", ".join(lib.terms[j].name() for j in zero[:5])
        raise ZeroColumn(f"all-zero library column(s): {names}")
    return norms


def _normalize_inplace(lib: EvaluatedLibrary) -> EvaluatedLibrary:
    norms = _column_norms(lib)
    M = lib.matrix
    M /= norms
    return EvaluatedLibrary(lib.matrix, lib.terms, lib.column_scales * norms, lib.mode)


def normalize_columns(lib: EvaluatedLibrary) -> EvaluatedLibrary:
    """Unit 2-norm columns; ``column_scales`` accumulates the divisors."""
    norms = _column_norms(lib)
    return EvaluatedLibrary(lib.matrix / norms, lib.terms, lib.column_scales * norms, lib.mode)
