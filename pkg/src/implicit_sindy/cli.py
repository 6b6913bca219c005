"""Command-line entry point: simulate, differentiate, identify, validate, report, count.

Exit codes: 0 success, 1 identification-quality failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import polynomial as P
from .benchmarks import make_benchmark, sample_ics
from .config import RunConfig, default_config
from .differentiation import DiffConfig, differentiate
from .dynamics import (
    Dataset,
    RationalStateModel,
    IntegratorConfig,
    OdeModel,
    Trajectory,
    generate_dataset,
    read_model_json,
    read_trajectory_csv,
    write_trajectory_csv,
)
from .errors import ConfigError, SindyError
from .library import count_monomials, count_polynomial_structures
from .pipeline import has_no_cliff, identify_dataset
from .selection import IdentifiedModel, validate_model

OUTPUT_ROOT_ENV = "IMPLICIT_SINDY_OUTPUT_ROOT"
EXIT_OK, EXIT_QUALITY, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


# -- configuration ------------------------------------------------------------

_FLAG_FIELDS = {
    "benchmark": "benchmark",
    "model_file": "model_file",
    "n_ics": "n_ics",
    "seed": "seed",
    "output_dir": "output_dir",
    "degree": "d_num",
}


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_config(args, run_dir_fallback: bool = False) -> RunConfig:
    """Benchmark defaults, then the config file, then command-line flags."""
    file_data: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        file_data = _load_json(path)
    elif run_dir_fallback and getattr(args, "output_dir", None):
        saved = Path(args.output_dir) / "config.json"
        if saved.is_file():
            file_data = _load_json(saved)
    flags = {f: getattr(args, a) for a, f in _FLAG_FIELDS.items() if getattr(args, a, None) is not None}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        flags[key.strip()] = _parse_value(value)
    if "model_file" in flags and "benchmark" not in flags:
        flags["benchmark"] = None
    bench = flags.get("benchmark", file_data.get("benchmark", "michaelis_menten"))
    try:
        base = default_config(bench).to_dict()
        base.update(file_data)
        base.update(flags)
        cfg = RunConfig.from_dict(base)
    except (ConfigError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    if cfg.output_dir is None:
        root = os.environ.get(OUTPUT_ROOT_ENV, "runs")
        label = cfg.benchmark or Path(cfg.model_file).stem
        cfg.output_dir = str(Path(root) / label)
    return cfg


def truth_model(cfg: RunConfig) -> OdeModel:
    if cfg.benchmark is not None:
        return make_benchmark(cfg.benchmark, {**_bench_defaults(cfg.benchmark), **cfg.params})
    path = Path(cfg.model_file)
    if not path.is_file():
        raise UsageError(f"model file not found: {path}")
    return read_model_json(path)


def _bench_defaults(name: str) -> dict:
    from .benchmarks import DEFAULTS

    return dict(DEFAULTS[name])


def training_ics(cfg: RunConfig, n_states: int) -> np.ndarray:
    if cfg.ics is not None:
        return np.asarray(cfg.ics, dtype=float).reshape(-1, n_states)
    if cfg.benchmark is None:
        raise UsageError("a model-file run needs an explicit 'ics' list")
    return sample_ics(cfg.benchmark, cfg.max_ics(n_states), cfg.seed)


def held_out_ics(cfg: RunConfig, n_states: int) -> np.ndarray:
    if cfg.benchmark is None:
        return training_ics(cfg, n_states)[: cfg.n_test_ics] * 1.1
    rng = np.random.default_rng(cfg.test_seed)
    from .benchmarks import IC_RANGES

    lo, hi = (np.asarray(v, dtype=float) for v in IC_RANGES[cfg.benchmark])
    return lo + (hi - lo) * rng.random((cfg.n_test_ics, n_states))


# -- data directory -----------------------------------------------------------


def load_dataset(run_dir: Path, cfg: RunConfig | None = None) -> Dataset:
    manifest = run_dir / "data" / "manifest.json"
    if manifest.is_file():
        files = [run_dir / "data" / f for f in _load_json(manifest)["files"]]
    else:
        files = sorted((run_dir / "data").glob("*.csv")) if (run_dir / "data").is_dir() else []
    if not files:
        raise UsageError(f"no trajectory data under {run_dir / 'data'}")
    trajs = []
    for f in files:
        if not f.is_file():
            raise UsageError(f"missing trajectory file {f}")
        try:
            tr = read_trajectory_csv(f)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        if tr.derivs is None:
            method = cfg.derivatives if cfg is not None else "central"
            if method == "exact":
                raise UsageError(f"{f} has no derivative columns; set derivatives to central or tv_regularized")
            dcfg = DiffConfig(method, alpha=cfg.tv_alpha if cfg else 1e-2)
            tr = Trajectory(tr.times, tr.states, differentiate(tr.times, tr.states, dcfg), "differentiated")
        trajs.append(tr)
    return Dataset(tuple(trajs), trajs[0].n_states)


# -- subcommands ---------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    model = truth_model(cfg)
    ics = training_ics(cfg, model.n_states)
    out = Path(cfg.output_dir)
    data_dir = out / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    for old in data_dir.glob("traj_*.csv"):
        old.unlink()
    ds = generate_dataset(model, ics, cfg.t_grid(), IntegratorConfig(cfg.rtol, cfg.atol))
    width = max(3, len(str(len(ds) - 1)))
    files = []
    for i, tr in enumerate(ds.trajectories):
        name = f"traj_{i:0{width}d}.csv"
        if cfg.derivatives != "exact":
            tr = Trajectory(tr.times, tr.states, None, "measured")
        write_trajectory_csv(data_dir / name, tr)
        files.append(name)
    _dump(data_dir / "manifest.json", {
        "model": model.to_dict(),
        "ics": ics.tolist(),
        "files": files,
        "derivatives": cfg.derivatives,
        "seed": cfg.seed,
    })
    _dump(out / "config.json", cfg.to_dict())
    print(f"wrote {len(files)} trajectories to {data_dir}")
    return EXIT_OK


def cmd_differentiate(args) -> int:
    dcfg = DiffConfig(args.method, alpha=args.alpha, max_iters=args.max_iters, tol=args.tol)
    inputs = [Path(p) for p in args.inputs]
    files = []
    for p in inputs:
        if p.is_dir():
            files += sorted(p.glob("*.csv"))
        elif p.is_file():
            files.append(p)
        else:
            raise UsageError(f"input not found: {p}")
    if not files:
        raise UsageError("no CSV inputs")
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    for f in files:
        try:
            tr = read_trajectory_csv(f)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        d = differentiate(tr.times, tr.states, dcfg)
        write_trajectory_csv(out_dir / f.name, Trajectory(tr.times, tr.states, d, "differentiated"))
    print(f"differentiated {len(files)} file(s) into {out_dir}")
    return EXIT_OK


def _write_pareto(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "term_count", "residual"])
        for lam, tc, res in rows:
            w.writerow([format(lam, ".17g"), tc, format(res, ".17g")])


def cmd_identify(args) -> int:
    cfg = resolve_config(args, run_dir_fallback=True)
    out = Path(cfg.output_dir)
    ds = load_dataset(out, cfg)
    model, results = identify_dataset(ds, cfg)
    log = []
    for r in results:
        label = f"x{r.state_index + 1}"
        if r.front is not None:
            _write_pareto(out / f"pareto_{label}.csv", r.front.to_rows())
        if r.sweep:
            _dump(out / f"sweep_{label}.json", [c.to_dict() for c in r.sweep])
        entry = r.provenance()
        entry["model"] = r.model.to_dict() if r.model is not None else None
        log.append(entry)
        status = r.error or f"{r.method}, {r.chosen.term_count if r.chosen else '?'} terms"
        print(f"{label}: {status} ({r.seconds:.1f} s)", file=sys.stderr)
        for w in r.warnings:
            print(f"  warning: {w}", file=sys.stderr)
    _dump(out / "run_log.json", {"residual_metric": "||Theta xi||_2 / sqrt(m), unit xi, unit columns",
                                 "states": log})
    if model is not None:
        _dump(out / "model.json", model.to_dict())
    _dump(out / "config.json", cfg.to_dict())
    if all(not r.ok for r in results):
        return EXIT_QUALITY
    if model is None:
        return EXIT_QUALITY
    if cfg.benchmark is not None and any(has_no_cliff(r) for r in results if r.method == "implicit"):
        return EXIT_QUALITY
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = resolve_config(args, run_dir_fallback=True)
    out = Path(cfg.output_dir)
    model_path = Path(args.model) if args.model else out / "model.json"
    if not model_path.is_file():
        raise UsageError(f"model file not found: {model_path}")
    try:
        identified = IdentifiedModel.from_dict(_load_json(model_path))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{model_path}: not a model file ({exc})") from exc
    if args.truth:
        truth_path = Path(args.truth)
        if not truth_path.is_file():
            raise UsageError(f"truth model not found: {truth_path}")
        truth = read_model_json(truth_path)
        bench = None
    else:
        truth = truth_model(cfg)
        bench = cfg.benchmark
    ics = held_out_ics(cfg, truth.n_states)
    stop = cfg.test_t_stop if cfg.test_t_stop is not None else cfg.t_stop
    report = validate_model(identified, truth, ics, cfg.t_grid(stop), IntegratorConfig(cfg.rtol, cfg.atol), bench)
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "validation.json", report)
    worst = max(report["max_rel_error_by_state"], default=0.0)
    print(f"max relative trajectory error {worst:.3e}")
    if report["max_param_rel_error"] is not None:
        print(f"max relative parameter error {report['max_param_rel_error']:.3e}")
    return EXIT_OK


def _state_names(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)]


def build_report(run_dir: Path) -> tuple[str, list[str]]:
    """Summary text for a run directory and the list of missing stages."""
    lines = [f"run: {run_dir}"]
    missing = []
    manifest = run_dir / "data" / "manifest.json"
    if manifest.is_file():
        m = _load_json(manifest)
        lines.append(f"data: {len(m['files'])} trajectories")
    else:
        missing.append("simulate")
        lines.append("data: absent")
    log_path = run_dir / "run_log.json"
    if log_path.is_file():
        log = _load_json(log_path)
        lines.append("identification:")
        for s in log["states"]:
            if s["error"]:
                lines.append(f"  {s['state']}: failed ({s['error']})")
                continue
            head = f"  {s['state']}: {s['method']}, {s['term_count']} terms"
            if s["cliff_decades"] is not None:
                head += f", residual {s['residual']:.3e}, cliff {s['cliff_decades']:.2f} decades"
            lines.append(head)
            model = s.get("model")
            if model:
                rs = RationalStateModel.from_dict(model)
                names = _state_names(rs.n)
                lines.append(f"    numerator:   {P.format_poly(rs.numerator, names)}")
                lines.append(f"    denominator: {P.format_poly(rs.denominator, names)}")
            for w in s["warnings"]:
                lines.append(f"    warning: {w}")
    else:
        missing.append("identify")
        lines.append("identification: absent")
    val_path = run_dir / "validation.json"
    if val_path.is_file():
        v = _load_json(val_path)
        errs = ", ".join(f"{e:.3e}" for e in v["max_rel_error_by_state"])
        lines.append(f"validation: max relative trajectory error per state [{errs}]")
        for p in v["parameters"]:
            rel = "n/a" if p["rel_error"] is None else f"{100 * p['rel_error']:.3f}%"
            lines.append(f"  {p['name']}: true {p['true']:.6g}, extracted {p['extracted']:.6g}, error {rel}")
    else:
        missing.append("validate")
        lines.append("validation: absent")
    if missing:
        lines.append("missing stages: " + ", ".join(missing))
    return "\n".join(lines) + "\n", missing


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir) if args.run_dir else Path(resolve_config(args).output_dir)
    if not run_dir.is_dir():
        raise UsageError(f"run directory not found: {run_dir}")
    text, missing = build_report(run_dir)
    (run_dir / "summary.txt").write_text(text)
    val_path = run_dir / "validation.json"
    if val_path.is_file():
        with open(run_dir / "parameters.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["name", "true", "extracted", "rel_error"])
            for p in _load_json(val_path)["parameters"]:
                w.writerow([p["name"], format(p["true"], ".17g"), format(p["extracted"], ".17g"),
                            "" if p["rel_error"] is None else format(p["rel_error"], ".17g")])
    sys.stdout.write(text)
    return EXIT_USAGE if len(missing) == 3 else EXIT_OK


def cmd_count(args) -> int:
    nm = count_monomials(args.n, args.d)
    exp, _ = count_polynomial_structures(args.n, args.d)
    print(f"N_m = {nm}")
    print(f"N_p = 2^{nm} - 1 ~ 10^{(nm * np.log10(2)):.2f}")
    return EXIT_OK


def cmd_print_defaults(args) -> int:
    sys.stdout.write(default_config(args.benchmark or "michaelis_menten").to_json())
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run config (flags override its values)")
    p.add_argument("--benchmark", choices=["michaelis_menten", "regulatory", "glycolysis"])
    p.add_argument("--model-file", dest="model_file", help="model JSON to simulate instead of a benchmark")
    p.add_argument("--n-ics", dest="n_ics", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--degree", type=int, help="implicit library degree")
    p.add_argument("--output-dir", dest="output_dir",
                   help=f"run directory (default ${OUTPUT_ROOT_ENV}/<benchmark>, root defaults to ./runs)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config field; VALUE is parsed as JSON when possible")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="implicit-sindy", description=__doc__.splitlines()[0])
    parser.add_argument("--print-defaults", action="store_true", help="print the default config JSON and exit")
    parser.add_argument("--benchmark", dest="defaults_benchmark",
                        choices=["michaelis_menten", "regulatory", "glycolysis"],
                        help="benchmark whose defaults --print-defaults shows")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("simulate", help="simulate a benchmark or model file to trajectory CSVs")
    _add_config_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("differentiate", help="append numerical derivative columns to trajectory CSVs")
    p.add_argument("inputs", nargs="+", help="CSV files or directories")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--method", choices=["central", "tv_regularized"], default="central")
    p.add_argument("--alpha", type=float, default=1e-2)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_differentiate)

    p = sub.add_parser("identify", help="identify every state from a run directory's data")
    _add_config_flags(p)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("validate", help="compare an identified model with the truth on held-out ICs")
    _add_config_flags(p)
    p.add_argument("--model", help="identified model JSON (default <run>/model.json)")
    p.add_argument("--truth", help="truth model JSON (default: the configured benchmark)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="summarize a run directory")
    p.add_argument("run_dir", nargs="?", help="run directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("count", help="number of monomials and candidate polynomial models")
    p.add_argument("--n", type=int, required=True, help="number of state variables")
    p.add_argument("--d", type=int, required=True, help="maximum degree")
    p.set_defaults(func=cmd_count)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.print_defaults:
        args.benchmark = args.defaults_benchmark
        return cmd_print_defaults(args)
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SindyError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
