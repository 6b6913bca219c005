"""Sparse multivariate polynomials stored as ``{exponent tuple: coefficient}``.

Arithmetic here is exact in the sense of symbolic expansion: products and
sums are formed term by term, never by sampling.
"""

from __future__ import annotations

from typing import Dict, Iterable, Mapping, Tuple

import numpy as np

Exponents = Tuple[int, ...]
Poly = Dict[Exponents, float]


def const(value: float, n: int) -> Poly:
    return {(0,) * n: float(value)} if value != 0 else {}


def var(index: int, n: int, coeff: float = 1.0) -> Poly:
    e = [0] * n
    e[index] = 1
    return {tuple(e): float(coeff)}


def monomial(exponents: Iterable[int], coeff: float = 1.0) -> Poly:
    return {tuple(int(v) for v in exponents): float(coeff)}


def clean(p: Mapping[Exponents, float]) -> Poly:
    return {e: float(c) for e, c in p.items() if c != 0}


def add(*polys: Mapping[Exponents, float]) -> Poly:
    out: Poly = {}
    for p in polys:
        for e, c in p.items():
            out[e] = out.get(e, 0.0) + c
    return clean(out)


def scale(p: Mapping[Exponents, float], s: float) -> Poly:
    return clean({e: c * s for e, c in p.items()})


def sub(a: Mapping[Exponents, float], b: Mapping[Exponents, float]) -> Poly:
    return add(a, scale(b, -1.0))


def mul(a: Mapping[Exponents, float], b: Mapping[Exponents, float]) -> Poly:
    out: Poly = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0.0) + ca * cb
    return clean(out)


def power(p: Mapping[Exponents, float], k: int, n: int) -> Poly:
    out = const(1.0, n)
    for _ in range(k):
        out = mul(out, p)
    return out


def degree(p: Mapping[Exponents, float]) -> int:
    return max((sum(e) for e in p), default=0)


def n_vars(p: Mapping[Exponents, float]) -> int | None:
    for e in p:
        return len(e)
    return None


def to_arrays(p: Mapping[Exponents, float], n: int) -> tuple[np.ndarray, np.ndarray]:
    """Exponent matrix (terms x n) and coefficient vector, in sorted term order."""
    keys = sorted(p)
    if not keys:
        return np.zeros((0, n), dtype=int), np.zeros(0)
    return np.array(keys, dtype=int).reshape(len(keys), n), np.array([p[k] for k in keys])


def evaluate(p: Mapping[Exponents, float], x: np.ndarray) -> np.ndarray:
    """Evaluate on a single state (n,) or a batch of states (m, n)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    exps, coeffs = to_arrays(p, n)
    if len(coeffs) == 0:
        return np.zeros(x.shape[:-1])
    # (..., terms, n) -> product over n
    vals = np.prod(x[..., None, :] ** exps, axis=-1)
    return vals @ coeffs


def common_monomial(*polys: Mapping[Exponents, float]) -> Exponents | None:
    """Largest monomial dividing every term of every polynomial."""
    keys = [e for p in polys for e in p]
    if not keys:
        return None
    return tuple(int(v) for v in np.min(np.array(keys), axis=0))


def divide_monomial(p: Mapping[Exponents, float], e: Exponents) -> Poly:
    return {tuple(a - b for a, b in zip(k, e)): c for k, c in p.items()}


def format_poly(p: Mapping[Exponents, float], names: list[str] | None = None, fmt: str = "{:.6g}") -> str:
    if not p:
        return "0"
    parts = []
    for e in sorted(p, key=lambda k: (sum(k), tuple(-v for v in k))):
        n = len(e)
        labels = names or [f"x{i + 1}" for i in range(n)]
        mono = "*".join(
            labels[i] if v == 1 else f"{labels[i]}^{v}" for i, v in enumerate(e) if v
        )
        coeff = fmt.format(p[e])
        parts.append(f"{coeff}*{mono}" if mono else coeff)
    return " + ".join(parts).replace("+ -", "- ")
