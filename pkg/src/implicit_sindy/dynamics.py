"""ODE models with polynomial or rational right-hand sides, simulation and data I/O."""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import polynomial as P
from .errors import (
    DenominatorZero,
    DimensionMismatch,
    IntegrationFailure,
    NonFiniteState,
    ZeroConstantDenominator,
)
from .integrate import integrate

SOURCES = ("simulated-exact", "differentiated", "measured")


@dataclass(frozen=True)
class RationalStateModel:
    """Right-hand side of one state, ``numerator(x) / denominator(x)``.

    A polynomial state is stored with denominator ``{0: 1}``.
    """

    state_index: int
    numerator: Mapping[tuple, float]
    denominator: Mapping[tuple, float]
    normalization: str = "constant"

    def __post_init__(self):
        object.__setattr__(self, "numerator", P.clean(self.numerator))
        object.__setattr__(self, "denominator", P.clean(self.denominator))
        if not self.denominator:
            raise DenominatorZero(f"state {self.state_index}: denominator is identically zero")

    @classmethod
    def polynomial(cls, state_index: int, coeffs: Mapping[tuple, float], n: int) -> "RationalStateModel":
        return cls(state_index, dict(coeffs), P.const(1.0, n))

    @property
    def n(self) -> int:
        return P.n_vars(self.denominator)

    @property
    def is_polynomial(self) -> bool:
        zero = (0,) * self.n
        return list(self.denominator) == [zero]

    def normalized(self) -> "RationalStateModel":
        """Divide through so the denominator constant term is 1.

        Without a constant term, the lowest-degree denominator term (first in
        graded order) is used and the result is tagged ``lowest-degree``.
        """
        zero = (0,) * self.n
        if zero in self.denominator:
            c, tag = self.denominator[zero], "constant"
        else:
            lead = min(self.denominator, key=lambda e: (sum(e), tuple(-v for v in e)))
            c, tag = self.denominator[lead], "lowest-degree"
            warnings.warn(
                f"state {self.state_index}: denominator has no constant term; "
                f"normalized by monomial {lead}",
                ZeroConstantDenominator,
                stacklevel=2,
            )
        if self.is_polynomial:
            return RationalStateModel(self.state_index, P.scale(self.numerator, 1 / c), P.const(1.0, self.n), tag)
        return RationalStateModel(
            self.state_index, P.scale(self.numerator, 1 / c), P.scale(self.denominator, 1 / c), tag
        )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return P.evaluate(self.numerator, x) / P.evaluate(self.denominator, x)

    def to_dict(self) -> dict:
        return {
            "state_index": self.state_index,
            "numerator": _terms_to_list(self.numerator),
            "denominator": _terms_to_list(self.denominator),
            "normalization": self.normalization,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RationalStateModel":
        return cls(
            int(d["state_index"]),
            _terms_from_list(d["numerator"]),
            _terms_from_list(d["denominator"]),
            d.get("normalization", "constant"),
        )


def _terms_to_list(p: Mapping[tuple, float]) -> list[dict]:
    order = sorted(p, key=lambda e: (sum(e), tuple(-v for v in e)))
    return [{"exponents": list(e), "coeff": float(p[e])} for e in order]


def _terms_from_list(items: Iterable[Mapping]) -> dict:
    out: dict = {}
    for item in items:
        e = tuple(int(v) for v in item["exponents"])
        out[e] = out.get(e, 0.0) + float(item["coeff"])
    return out


@dataclass(frozen=True)
class OdeModel:
    n_states: int
    rhs: tuple
    param_labels: Mapping[str, float] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "rhs", tuple(self.rhs))
        if len(self.rhs) != self.n_states:
            raise DimensionMismatch(f"expected {self.n_states} state equations, got {len(self.rhs)}")
        for s in self.rhs:
            for e in list(s.numerator) + list(s.denominator):
                if len(e) != self.n_states:
                    raise DimensionMismatch(
                        f"state {s.state_index}: exponent vector {e} has length {len(e)} != {self.n_states}"
                    )
        self._compile()

    def _compile(self):
        n = self.n_states
        monos = sorted({e for s in self.rhs for e in list(s.numerator) + list(s.denominator)})
        index = {e: i for i, e in enumerate(monos)}
        num = np.zeros((len(monos), n))
        den = np.zeros((len(monos), n))
        for k, s in enumerate(self.rhs):
            for e, c in s.numerator.items():
                num[index[e], k] = c
            for e, c in s.denominator.items():
                den[index[e], k] = c
        object.__setattr__(self, "_exps", np.array(monos, dtype=float).reshape(len(monos), n))
        object.__setattr__(self, "_num", num)
        object.__setattr__(self, "_den", den)

    def parts(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Numerator and denominator values, each with the shape of ``x``."""
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore", over="ignore"):
            mono = np.prod(x[..., None, :] ** self._exps, axis=-1)
        return mono @ self._num, mono @ self._den

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        num, den = self.parts(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return num / den

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_states": self.n_states,
            "param_labels": {k: float(v) for k, v in self.param_labels.items()},
            "states": [s.to_dict() for s in self.rhs],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "OdeModel":
        states = []
        for i, s in enumerate(d["states"]):
            s = dict(s)
            s.setdefault("state_index", i)
            states.append(RationalStateModel.from_dict(s))
        return cls(int(d["n_states"]), tuple(states), dict(d.get("param_labels", {})), d.get("name", ""))


def evaluate_rhs(model: OdeModel, state: Sequence[float]) -> np.ndarray:
    """Evaluate ``f(state)`` for one state vector (or a batch of rows)."""
    x = np.asarray(state, dtype=float)
    if x.shape[-1] != model.n_states:
        raise DimensionMismatch(f"state has length {x.shape[-1]}, model has {model.n_states} states")
    num, den = model.parts(x)
    if np.any(den == 0) or not np.all(np.isfinite(den)):
        raise DenominatorZero(f"denominator vanishes at state {x.tolist()}")
    return num / den


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 1_000_000


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray | None = None
    source: str = "simulated-exact"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.atleast_2d(np.asarray(self.states, dtype=float))
        if x.shape[0] != len(t):
            x = x.T if x.shape[1] == len(t) else x
        if x.shape[0] != len(t):
            raise DimensionMismatch(f"{len(t)} times but states have shape {x.shape}")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", x)
        if self.derivs is not None:
            d = np.asarray(self.derivs, dtype=float).reshape(x.shape)
            object.__setattr__(self, "derivs", d)
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")

    @property
    def n_states(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class Dataset:
    trajectories: tuple
    n_states: int

    def __post_init__(self):
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        for tr in self.trajectories:
            if tr.n_states != self.n_states:
                raise DimensionMismatch("trajectories disagree on the number of states")

    @property
    def stacked_states(self) -> np.ndarray:
        if not self.trajectories:
            return np.zeros((0, self.n_states))
        return np.vstack([tr.states for tr in self.trajectories])

    @property
    def stacked_derivs(self) -> np.ndarray:
        if not self.trajectories:
            return np.zeros((0, self.n_states))
        if any(tr.derivs is None for tr in self.trajectories):
            raise ValueError("some trajectories have no derivative data")
        return np.vstack([tr.derivs for tr in self.trajectories])

    def subset(self, count: int | None) -> "Dataset":
        if count is None:
            return self
        return Dataset(self.trajectories[:count], self.n_states)

    def __len__(self) -> int:
        return len(self.trajectories)


def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) == 0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be a non-empty strictly increasing vector")
    return t


def _run(model: OdeModel, ics: np.ndarray, t: np.ndarray, cfg: IntegratorConfig) -> np.ndarray:
    Y = integrate(model, t, ics, rtol=cfg.rtol, atol=cfg.atol, max_steps=cfg.max_steps)
    if not np.all(np.isfinite(Y)):
        raise NonFiniteState("trajectory contains non-finite values")
    return Y


def simulate(model: OdeModel, ic: Sequence[float], t_grid, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate ``model`` from ``ic`` and sample states and exact derivatives on ``t_grid``."""
    cfg = cfg or IntegratorConfig()
    ic = np.asarray(ic, dtype=float)
    if ic.shape != (model.n_states,):
        raise DimensionMismatch(f"ic has shape {ic.shape}, model has {model.n_states} states")
    t = _check_grid(t_grid)
    X = _run(model, ic, t, cfg)
    return Trajectory(t, X, evaluate_rhs(model, X), "simulated-exact")


def generate_dataset(
    model: OdeModel,
    ics: Sequence[Sequence[float]],
    t_grid,
    cfg: IntegratorConfig | None = None,
    batch_size: int = 256,
) -> Dataset:
    """One trajectory per initial condition, stacked in the given order.

    Initial conditions are integrated in batches sharing a step size; if a
    batch fails, its members are re-run one by one so the error names the
    offending index.
    """
    cfg = cfg or IntegratorConfig()
    t = _check_grid(t_grid)
    ics = np.asarray(ics, dtype=float).reshape(-1, model.n_states)
    trajs = []
    for start in range(0, len(ics), batch_size):
        batch = ics[start:start + batch_size]
        try:
            Y = _run(model, batch, t, cfg)
        except IntegrationFailure:
            for j, ic in enumerate(batch):
                try:
                    simulate(model, ic, t, cfg)
                except IntegrationFailure as exc:
                    raise type(exc)(f"initial condition {start + j}: {exc}") from exc
            raise
        for j in range(len(batch)):
            X = Y[:, j, :]
            trajs.append(Trajectory(t, X, evaluate_rhs(model, X), "simulated-exact"))
    return Dataset(tuple(trajs), model.n_states)


# -- file formats -----------------------------------------------------------


def write_trajectory_csv(path: str | Path, traj: Trajectory) -> None:
    n = traj.n_states
    header = ["t"] + [f"x{i + 1}" for i in range(n)]
    cols = [traj.times[:, None], traj.states]
    if traj.derivs is not None:
        header += [f"dx{i + 1}" for i in range(n)]
        cols.append(traj.derivs)
    data = np.hstack(cols)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in data:
            w.writerow([format(float(v), ".17g") for v in row])


def read_trajectory_csv(path: str | Path, source: str | None = None) -> Trajectory:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "t":
        raise ValueError(f"{path}: header must start with 't'")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float).reshape(-1, len(header))
    xcols = [i for i, h in enumerate(header) if h.startswith("x")]
    dcols = [i for i, h in enumerate(header) if h.startswith("dx")]
    if dcols and len(dcols) != len(xcols):
        raise ValueError(f"{path}: {len(xcols)} state columns but {len(dcols)} derivative columns")
    derivs = data[:, dcols] if dcols else None
    if source is None:
        source = "simulated-exact" if dcols else "measured"
    return Trajectory(data[:, 0], data[:, xcols], derivs, source)


def write_model_json(path: str | Path, model: OdeModel, extra: Mapping | None = None) -> None:
    d = model.to_dict()
    if extra:
        d.update(extra)
    Path(path).write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")


def read_model_json(path: str | Path) -> OdeModel:
    return OdeModel.from_dict(json.loads(Path(path).read_text()))
