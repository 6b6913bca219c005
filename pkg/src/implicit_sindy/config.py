"""Run configuration with per-benchmark defaults and JSON round-tripping."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError
from .sparse import AdmConfig


@dataclass
class RunConfig:
    """Everything needed to reproduce one identification run.

    State labels in ``state_overrides`` and ``states`` are 1-based
    (``"x1"``, ``"x2"``, ...), as in reports.
    """

    benchmark: str | None = "michaelis_menten"
    model_file: str | None = None
    params: dict = field(default_factory=dict)
    # initial conditions: explicit list, else the benchmark's seeded sampler
    ics: list | None = None
    n_ics: int = 2
    seed: int = 0
    # sampling grid
    t_start: float = 0.0
    t_stop: float = 10.0
    n_samples: int = 1000
    rtol: float = 1e-10
    atol: float = 1e-12
    derivatives: str = "exact"
    tv_alpha: float = 1e-2
    # implicit library and sparse search
    d_num: int = 4
    d_den: int | None = None
    rank_tol_rel: float = 1e-8
    lambda_min: float = 1e-4
    lambda_max: float = 1.0
    lambda_count: int = 41
    adm_max_iters: int = 1000
    adm_tol: float = 1e-6
    adm_initializations: int = 64
    l1_rounding: bool = True
    drop_threshold: float = 2.0
    prune_tol: float = 1e-6
    # explicit fallback for polynomial states
    method: str = "auto"
    explicit_degree: int = 2
    explicit_lambda: float = 1e-3
    states: list | None = None
    state_overrides: dict = field(default_factory=dict)
    # validation
    n_test_ics: int = 3
    test_seed: int = 12345
    test_t_stop: float | None = None
    output_dir: str | None = None

    def lambda_grid(self) -> np.ndarray:
        return np.logspace(np.log10(self.lambda_min), np.log10(self.lambda_max), self.lambda_count)

    def t_grid(self, stop: float | None = None) -> np.ndarray:
        return np.linspace(self.t_start, self.t_stop if stop is None else stop, self.n_samples)

    def adm(self) -> AdmConfig:
        return AdmConfig(self.adm_max_iters, self.adm_tol, self.adm_initializations, self.seed, self.l1_rounding)

    def for_state(self, k: int) -> "RunConfig":
        """Copy with the overrides for 0-based state ``k`` applied."""
        over = self.state_overrides.get(f"x{k + 1}", {})
        return dataclasses.replace(self, **over) if over else self

    def max_ics(self, n_states: int) -> int:
        base = len(self.ics) if self.ics is not None else self.n_ics
        extra = [self.state_overrides.get(f"x{k + 1}", {}).get("n_ics", 0) for k in range(n_states)]
        return max([base] + extra)

    def validate(self) -> None:
        if (self.benchmark is None) == (self.model_file is None):
            raise ConfigError("exactly one of benchmark and model_file must be set")
        if self.lambda_min <= 0 or self.lambda_max < self.lambda_min or self.lambda_count < 1:
            raise ConfigError("lambda grid must be positive and ascending")
        if self.n_samples < 3 or self.t_stop <= self.t_start:
            raise ConfigError("time grid needs at least 3 samples over a positive span")
        if self.method not in ("auto", "implicit", "explicit"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.derivatives not in ("exact", "central", "tv_regularized"):
            raise ConfigError(f"unknown derivative source {self.derivatives!r}")
        names = {f.name for f in dataclasses.fields(self)}
        for label, over in self.state_overrides.items():
            bad = set(over) - names
            if bad:
                raise ConfigError(f"unknown override keys for {label}: {sorted(bad)}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        bad = set(d) - names
        if bad:
            raise ConfigError(f"unknown config keys: {sorted(bad)}")
        cfg = cls(**dict(d))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


_POLYNOMIAL_STATE = {"method": "explicit"}

BENCHMARK_DEFAULTS: dict[str, dict] = {
    "michaelis_menten": dict(n_ics=2, d_num=4),
    "regulatory": dict(n_ics=40, d_num=6),
    # Many short, sparsely sampled transients: long runs collapse onto the
    # limit cycle and the degree-6 library then has spurious null directions,
    # and scattering rows over more ICs keeps the library better conditioned.
    "glycolysis": dict(
        n_ics=1200, t_stop=0.2, n_samples=10, d_num=6, rank_tol_rel=1e-13,
        lambda_min=1e-6, lambda_count=61,
        test_t_stop=2.0, n_test_ics=1,
        state_overrides={
            "x3": _POLYNOMIAL_STATE, "x4": _POLYNOMIAL_STATE, "x5": _POLYNOMIAL_STATE,
            "x7": _POLYNOMIAL_STATE, "x6": {"n_ics": 2400},
        },
    ),
}


def default_config(benchmark: str | None = "michaelis_menten") -> RunConfig:
    if benchmark is None:
        return RunConfig(benchmark=None)
    if benchmark not in BENCHMARK_DEFAULTS:
        raise ConfigError(f"unknown benchmark {benchmark!r}")
    cfg = RunConfig(benchmark=benchmark, **BENCHMARK_DEFAULTS[benchmark])
    return cfg
