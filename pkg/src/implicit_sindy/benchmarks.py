"""Benchmark biochemical models and the algebra that maps expanded
coefficients back to their named parameters.

States are zero-indexed in code and labelled ``x1 .. xn`` in reports.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from . import polynomial as P
from .dynamics import OdeModel, RationalStateModel
from .errors import MissingParameter, UnknownBenchmark

MICHAELIS_MENTEN_DEFAULTS = {"jx": 0.6, "Vmax": 1.5, "Km": 0.3}

REGULATORY_DEFAULTS = {"a1": 0.004, "a2": 0.07, "a3": 0.04, "b1": 0.82, "b2": 1854.5}

GLYCOLYSIS_DEFAULTS = {
    "c1": 2.5, "c2": -100.0, "c3": 13.6769,
    "d1": 200.0, "d2": 13.6769, "d3": -6.0, "d4": -6.0,
    "e1": 6.0, "e2": -64.0, "e3": 6.0, "e4": 16.0,
    "f1": 64.0, "f2": -13.0, "f3": 13.0, "f4": -16.0, "f5": -100.0,
    "g1": 1.3, "g2": -3.1,
    "h1": -200.0, "h2": 13.6769, "h3": 128.0, "h4": -1.28, "h5": -32.0,
    "j1": 6.0, "j2": -18.0, "j3": -100.0,
}

DEFAULTS = {
    "michaelis_menten": MICHAELIS_MENTEN_DEFAULTS,
    "regulatory": REGULATORY_DEFAULTS,
    "glycolysis": GLYCOLYSIS_DEFAULTS,
}


def _mono(n: int, coeff: float = 1.0, **powers: int) -> dict:
    """Monomial from keyword powers, e.g. ``_mono(7, 2.0, x1=1, x6=1)``."""
    e = [0] * n
    for name, p in powers.items():
        e[int(name[1:]) - 1] = p
    return {tuple(e): float(coeff)}


def _rational_sum(n: int, terms: Sequence[tuple[dict, dict]]) -> tuple[dict, dict]:
    """Sum of ``num_i / den_i`` over a common denominator.

    Terms sharing a denominator are merged first so the result has the
    lowest-degree denominator the term structure allows.
    """
    groups: dict = {}
    for num, den in terms:
        key = frozenset(P.clean(den).items())
        groups[key] = P.add(groups.get(key, {}), num)
    dens = [dict(k) for k in groups]
    nums = list(groups.values())
    numerator: dict = {}
    for i, num in enumerate(nums):
        prod = num
        for j, den in enumerate(dens):
            if j != i:
                prod = P.mul(prod, den)
        numerator = P.add(numerator, prod)
    denominator = P.const(1.0, n)
    for den in dens:
        denominator = P.mul(denominator, den)
    return numerator, denominator


def _state(k: int, n: int, terms) -> RationalStateModel:
    num, den = _rational_sum(n, terms)
    return RationalStateModel(k, num, den).normalized()


def _require(params: Mapping[str, float], names) -> dict:
    missing = [k for k in names if k not in params]
    if missing:
        raise MissingParameter(f"missing parameters: {', '.join(missing)}")
    return {k: float(params[k]) for k in names}


def michaelis_menten(params: Mapping[str, float]) -> OdeModel:
    """x' = jx - Vmax x / (Km + x)."""
    p = _require(params, MICHAELIS_MENTEN_DEFAULTS)
    n, one = 1, P.const(1.0, 1)
    x = _mono(n, x1=1)
    s = _state(0, n, [
        (P.const(p["jx"], n), one),
        (P.scale(x, -p["Vmax"]), P.add(P.const(p["Km"], n), x)),
    ])
    return OdeModel(1, (s,), p, "michaelis_menten")


def regulatory(params: Mapping[str, float]) -> OdeModel:
    """Two-state competence circuit (ComK x1, ComS x2)."""
    p = _require(params, REGULATORY_DEFAULTS)
    n, one = 2, P.const(1.0, 2)
    x1, x2 = _mono(n, x1=1), _mono(n, x2=1)
    degradation = P.add(one, x1, x2)
    s1 = _state(0, n, [
        (P.const(p["a1"], n), one),
        (_mono(n, p["a2"], x1=2), P.add(P.const(p["a3"], n), _mono(n, x1=2))),
        (P.scale(x1, -1.0), degradation),
    ])
    s2 = _state(1, n, [
        (P.const(p["b1"], n), P.add(one, _mono(n, p["b2"], x1=5))),
        (P.scale(x2, -1.0), degradation),
    ])
    return OdeModel(2, (s1, s2), p, "regulatory")


def glycolysis(params: Mapping[str, float]) -> OdeModel:
    """Seven-state yeast glycolysis oscillator."""
    p = _require(params, GLYCOLYSIS_DEFAULTS)
    n, one = 7, P.const(1.0, 7)

    def m(c, **pw):
        return _mono(n, c, **pw)

    def poly(*monos):
        return (P.add(*monos), one)

    inhib = lambda k: P.add(one, m(p[k], x6=4))  # noqa: E731
    states = [
        _state(0, n, [poly(m(p["c1"])), (m(p["c2"], x1=1, x6=1), inhib("c3"))]),
        _state(1, n, [
            (m(p["d1"], x1=1, x6=1), inhib("d2")),
            poly(m(p["d3"], x2=1), m(p["d4"], x2=1, x7=1)),
        ]),
        _state(2, n, [poly(
            m(p["e1"], x2=1), m(p["e2"], x3=1), m(-p["e3"], x2=1, x7=1), m(p["e4"], x3=1, x6=1)
        )]),
        _state(3, n, [poly(
            m(p["f1"], x3=1), m(p["f2"], x4=1), m(p["f3"], x5=1),
            m(p["f4"], x3=1, x6=1), m(p["f5"], x4=1, x7=1),
        )]),
        _state(4, n, [poly(m(p["g1"], x4=1), m(p["g2"], x5=1))]),
        _state(5, n, [
            (m(p["h1"], x1=1, x6=1), inhib("h2")),
            poly(m(p["h3"], x3=1), m(p["h4"], x6=1), m(p["h5"], x3=1, x6=1)),
        ]),
        _state(6, n, [poly(m(p["j1"], x2=1), m(p["j2"], x2=1, x7=1), m(p["j3"], x4=1, x7=1))]),
    ]
    return OdeModel(7, tuple(states), p, "glycolysis")


BUILDERS: dict[str, Callable[[Mapping[str, float]], OdeModel]] = {
    "michaelis_menten": michaelis_menten,
    "regulatory": regulatory,
    "glycolysis": glycolysis,
}


def make_benchmark(name: str, params: Mapping[str, float] | None = None) -> OdeModel:
    """Build a benchmark model from a full parameter set (defaults when ``params`` is None)."""
    if name not in BUILDERS:
        raise UnknownBenchmark(f"unknown benchmark {name!r}; choose from {sorted(BUILDERS)}")
    return BUILDERS[name](DEFAULTS[name] if params is None else params)


# -- parameter correspondence ------------------------------------------------


def _get(p: Mapping[tuple, float], n: int, **powers) -> float:
    (e,) = _mono(n, **powers)
    return float(p.get(e, np.nan))


def _mm_params(states) -> dict:
    s = states[0]
    num, den = s.numerator, s.denominator
    km = 1.0 / _get(den, 1, x1=1)
    jx = _get(num, 1)
    return {"jx": jx, "Vmax": jx - _get(num, 1, x1=1) * km, "Km": km}


def _regulatory_params(states) -> dict:
    out = {}
    s1, s2 = states
    if s1 is not None:
        a1 = _get(s1.numerator, 2)
        a3 = 1.0 / _get(s1.denominator, 2, x1=2)
        out.update(a1=a1, a3=a3, a2=_get(s1.numerator, 2, x1=2) * a3 - a1)
    if s2 is not None:
        out.update(b1=_get(s2.numerator, 2), b2=_get(s2.denominator, 2, x1=5))
    return out


def _glycolysis_params(states) -> dict:
    n = 7
    out = {}
    s = states
    if s[0] is not None:
        out.update(c1=_get(s[0].numerator, n), c2=_get(s[0].numerator, n, x1=1, x6=1),
                   c3=_get(s[0].denominator, n, x6=4))
    if s[1] is not None:
        out.update(d1=_get(s[1].numerator, n, x1=1, x6=1), d2=_get(s[1].denominator, n, x6=4),
                   d3=_get(s[1].numerator, n, x2=1), d4=_get(s[1].numerator, n, x2=1, x7=1))
    if s[2] is not None:
        num = s[2].numerator
        out.update(e1=_get(num, n, x2=1), e2=_get(num, n, x3=1), e3=-_get(num, n, x2=1, x7=1),
                   e4=_get(num, n, x3=1, x6=1))
    if s[3] is not None:
        num = s[3].numerator
        out.update(f1=_get(num, n, x3=1), f2=_get(num, n, x4=1), f3=_get(num, n, x5=1),
                   f4=_get(num, n, x3=1, x6=1), f5=_get(num, n, x4=1, x7=1))
    if s[4] is not None:
        out.update(g1=_get(s[4].numerator, n, x4=1), g2=_get(s[4].numerator, n, x5=1))
    if s[5] is not None:
        num = s[5].numerator
        out.update(h1=_get(num, n, x1=1, x6=1), h2=_get(s[5].denominator, n, x6=4),
                   h3=_get(num, n, x3=1), h4=_get(num, n, x6=1), h5=_get(num, n, x3=1, x6=1))
    if s[6] is not None:
        num = s[6].numerator
        out.update(j1=_get(num, n, x2=1), j2=_get(num, n, x2=1, x7=1), j3=_get(num, n, x4=1, x7=1))
    return out


EXTRACTORS = {
    "michaelis_menten": _mm_params,
    "regulatory": _regulatory_params,
    "glycolysis": _glycolysis_params,
}


def extract_parameters(name: str, states: Sequence[RationalStateModel | None]) -> dict[str, float]:
    """Named parameters read off normalized (denominator constant = 1) state models.

    ``states`` holds one entry per state; ``None`` skips that state's
    parameters. Terms absent from a model come back as NaN.
    """
    if name not in EXTRACTORS:
        raise UnknownBenchmark(name)
    return EXTRACTORS[name](list(states))


# -- sampling defaults ---------------------------------------------------------

IC_RANGES = {
    "michaelis_menten": ([0.1], [1.5]),
    "regulatory": ([0.0, 0.0], [0.8, 8.0]),
    "glycolysis": ([0.1] * 6 + [0.05], [2.0] * 6 + [0.95]),
}

EXPLICIT_ICS = {"michaelis_menten": [[0.5], [1.0]]}


def sample_ics(name: str, count: int, seed: int = 0) -> np.ndarray:
    """``count`` initial conditions: the documented defaults first, then seeded uniform draws."""
    lo, hi = (np.asarray(v, dtype=float) for v in IC_RANGES[name])
    fixed = np.asarray(EXPLICIT_ICS.get(name, np.zeros((0, len(lo)))), dtype=float).reshape(-1, len(lo))
    take = fixed[:count]
    rng = np.random.default_rng(seed)
    draws = lo + (hi - lo) * rng.random((count - len(take), len(lo)))
    return np.vstack([take, draws])
