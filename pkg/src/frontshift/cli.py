"""``frontshift`` command line.

Subcommands: gen, degrade, optimize, evaluate, grid, verify. Settings come
from built-in defaults, then ``--preset``, then ``--config`` (JSON or YAML),
then explicit flags. The merged settings are validated before any work
starts and written next to every output.

``--seed`` is the root seed of an invocation. Component seeds derive from it
with :func:`~frontshift.diagnostics.derive_seed`:

* gen: ``(seed, task, "gen")``
* degrade: ``(seed, task, "suite")``
* optimize: ``(seed, task, "surrogate", level)`` and ``(seed, task, method, level)``
* grid: the grid's own derivation with ``root_seed = seed``

Exit codes: 0 success, 2 configuration error, 3 data error, 4 compute error
(including failed checks). Success and error records are printed as JSON,
on stdout and stderr respectively.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from .diagnostics import (
    ExperimentGrid,
    convergence_sweep,
    derive_seed,
    lemma1_terms,
    run_grid,
)
from .io import (
    DataError,
    FORMAT_VERSION,
    METRICS_FORMAT,
    REPORT_FORMAT,
    SUMMARY_FORMAT,
    read_dataset,
    read_json,
    read_points,
    write_dataset,
    write_json,
    write_solutions,
    write_summary,
)
from .metrics import KernelConfig, ObjectiveScaler, evaluate_set, fingerprint
from .optimizers import METHODS, Nsga2Config, ResamplerConfig, run_method
from .problems import ProblemSpec, front_discretization, make_problem, sample_offline_dataset
from .shift_lab import (
    DESK_POOL_SIZE,
    DESK_SCHEDULE,
    PAPER_POOL_SIZE,
    PAPER_SCHEDULE,
    PoolExhaustedError,
    ShiftSchedule,
    build_pool,
    degrade,
    removal_order,
)
from .surrogate import SurrogateFitError, fit

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_COMPUTE = 0, 2, 3, 4


class ConfigError(ValueError):
    """Invalid or inconsistent settings."""


class ComputeError(RuntimeError):
    """A computation failed or a verification check did not hold."""


def _schedule_dict(s: ShiftSchedule) -> dict:
    return {"levels": s.levels, "removal_per_level": s.removal_per_level, "resample_size": s.resample_size}


PRESETS: dict[str, dict] = {
    "desk": {"schedule": _schedule_dict(DESK_SCHEDULE), "pool_size": DESK_POOL_SIZE},
    "paper-scale": {"schedule": _schedule_dict(PAPER_SCHEDULE), "pool_size": PAPER_POOL_SIZE},
}


@dataclasses.dataclass
class RunConfig:
    """Every setting any subcommand reads; unknown keys are rejected."""

    tasks: list = dataclasses.field(default_factory=lambda: ["zdt1"])
    methods: list = dataclasses.field(default_factory=lambda: list(METHODS))
    seed: int = 0
    seeds: list = dataclasses.field(default_factory=lambda: [0, 1, 2, 3, 4])
    n: int = 1_000
    schedule: dict = dataclasses.field(default_factory=lambda: _schedule_dict(DESK_SCHEDULE))
    pool_size: int = DESK_POOL_SIZE
    run_levels: list | None = None
    kernel: dict = dataclasses.field(default_factory=dict)
    nsga2: dict = dataclasses.field(default_factory=dict)
    resampler: dict = dataclasses.field(default_factory=dict)
    surrogate: dict = dataclasses.field(default_factory=dict)
    out_n: int = 256
    front_resolution: int = 10_000
    normalize: str = "pool"
    workers: int = 1
    # verify
    samples: int = 1_000
    resolutions: list = dataclasses.field(default_factory=lambda: [10, 100, 1_000, 10_000])
    synthetic_triples: int = 1_000

    @classmethod
    def merge(cls, *layers: dict) -> RunConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        merged: dict = cls().to_dict()
        for layer in layers:
            unknown = set(layer) - known
            if unknown:
                raise ConfigError(f"unknown config keys {sorted(unknown)}")
            for key, value in layer.items():
                if isinstance(value, dict) and isinstance(merged.get(key), dict):
                    merged[key] = {**merged[key], **value}
                else:
                    merged[key] = value
        try:
            return cls(**merged)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    # typed views; each raises ConfigError

    def problems(self) -> list[ProblemSpec]:
        out = []
        for t in self.tasks:
            try:
                out.append(make_problem(t) if isinstance(t, str) else make_problem(t["family"], t.get("d"), t.get("m")))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"invalid task {t!r}: {exc}") from exc
        if not out:
            raise ConfigError("no task given")
        return out

    def problem(self) -> ProblemSpec:
        problems = self.problems()
        if len(problems) != 1:
            raise ConfigError(f"this command takes exactly one task, got {len(problems)}")
        return problems[0]

    def shift_schedule(self, seed: int = 0) -> ShiftSchedule:
        return _build(ShiftSchedule, {**self.schedule, "seed": seed}, "schedule")

    def kernel_config(self) -> KernelConfig:
        return _build(KernelConfig, self.kernel, "kernel")

    def nsga2_config(self) -> Nsga2Config:
        return _build(Nsga2Config, self.nsga2, "nsga2")

    def resampler_config(self) -> ResamplerConfig:
        return _build(ResamplerConfig, self.resampler, "resampler")

    def surrogate_kwargs(self) -> dict:
        allowed = {"ridge", "bandwidth", "max_train"}
        unknown = set(self.surrogate) - allowed
        if unknown:
            raise ConfigError(f"unknown surrogate keys {sorted(unknown)}")
        return dict(self.surrogate)

    def grid(self) -> ExperimentGrid:
        try:
            return ExperimentGrid(
                tasks=tuple(self.problems()),
                methods=tuple(self.methods),
                seeds=tuple(int(s) for s in self.seeds),
                schedule=self.shift_schedule(),
                pool_size=int(self.pool_size),
                levels=None if self.run_levels is None else tuple(self.run_levels),
                kernel=self.kernel_config(),
                nsga2=self.nsga2_config(),
                resampler=self.resampler_config(),
                out_n=int(self.out_n),
                front_resolution=int(self.front_resolution),
                normalize=self.normalize,
                root_seed=int(self.seed),
                workers=int(self.workers),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid grid: {exc}") from exc


def _build(cls, values: dict, name: str):
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name} settings: {exc}") from exc


def _load_config_file(path: str) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text) if p.suffix in (".yaml", ".yml") else json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return data


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def _flag_layer(args: argparse.Namespace) -> dict:
    layer: dict = {}
    if args.task is not None:
        layer["tasks"] = [t.strip() for t in args.task.split(",") if t.strip()]
    if getattr(args, "method", None) is not None:
        layer["methods"] = [m.strip() for m in args.method.split(",") if m.strip()]
    if args.seed is not None:
        layer["seed"] = args.seed
    if getattr(args, "seeds", None) is not None:
        seeds = _int_list(args.seeds)
        layer["seeds"] = list(range(seeds[0])) if len(seeds) == 1 else seeds
    if getattr(args, "levels", None) is not None:
        layer["schedule"] = {"levels": args.levels}
    if getattr(args, "run_levels", None) is not None:
        layer["run_levels"] = _int_list(args.run_levels)
    if getattr(args, "n", None) is not None:
        layer["n"] = args.n
    if getattr(args, "workers", None) is not None:
        layer["workers"] = args.workers
    if getattr(args, "normalize", None) is not None:
        layer["normalize"] = args.normalize
    return layer


def resolve_config(args: argparse.Namespace) -> RunConfig:
    layers = []
    if args.preset is not None:
        layers.append(PRESETS[args.preset])
    if args.config is not None:
        layers.append(_load_config_file(args.config))
    layers.append(_flag_layer(args))
    return RunConfig.merge(*layers)


def _provenance(cfg: RunConfig, command: str) -> dict:
    resolved = {"command": command, **cfg.to_dict()}
    return {"config": resolved, "config_fingerprint": fingerprint(resolved)}


def _write_resolved(out_dir: Path, prov: dict) -> Path:
    return write_json(out_dir / "config.resolved.json", {"format_version": FORMAT_VERSION, **prov})


def _need(path: str | None, flag: str) -> str:
    if path is None:
        raise ConfigError(f"{flag} is required")
    return path


# --------------------------------------------------------------------------
# subcommands; each returns the list of files written


def cmd_gen(args, cfg: RunConfig) -> list[Path]:
    """Uniform offline dataset of ``n`` designs."""
    spec = cfg.problem()
    if cfg.n < 1:
        raise ConfigError("n must be >= 1")
    out = Path(_need(args.out, "--out"))
    prov = _provenance(cfg, "gen")
    data = sample_offline_dataset(spec, cfg.n, derive_seed(cfg.seed, spec.name, "gen"))
    return [write_dataset(out, data, config_fingerprint=prov["config_fingerprint"], extra=prov)]


def cmd_degrade(args, cfg: RunConfig) -> list[Path]:
    """One dataset per shift level, from ``--input`` or a freshly sampled pool."""
    out_dir = Path(_need(args.out, "--out"))
    if args.input is not None:
        pool = read_dataset(args.input)
        spec = pool.problem
    else:
        spec = cfg.problem()
        pool = None
    schedule = cfg.shift_schedule(derive_seed(cfg.seed, spec.name, "suite"))
    if pool is None:
        if cfg.pool_size < schedule.min_pool_size():
            raise ConfigError(f"pool_size {cfg.pool_size} < {schedule.min_pool_size()} required by the schedule")
        pool = build_pool(spec, cfg.pool_size, schedule.seed)
    prov = _provenance(cfg, "degrade")
    order = removal_order(pool, schedule.seed)
    paths = []
    for k in range(schedule.levels):
        data = degrade(pool, schedule, k, order=order)
        paths.append(
            write_dataset(out_dir / f"level_{k}.csv", data, config_fingerprint=prov["config_fingerprint"])
        )
    paths.append(_write_resolved(out_dir, prov))
    return paths


def cmd_optimize(args, cfg: RunConfig) -> list[Path]:
    """Fit a surrogate on ``--input`` and run one method; writes solutions and the model."""
    data = read_dataset(_need(args.input, "--input"))
    if len(cfg.methods) != 1:
        raise ConfigError(f"optimize takes exactly one --method, got {cfg.methods}")
    method = cfg.methods[0]
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; expected one of {METHODS}")
    nsga2, resampler = cfg.nsga2_config(), cfg.resampler_config()
    kwargs = cfg.surrogate_kwargs()
    out = Path(_need(args.out, "--out"))
    prov = _provenance(cfg, "optimize")
    name, level = data.problem.name, data.shift_level
    try:
        model = fit(data, seed=derive_seed(cfg.seed, name, "surrogate", level), **kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid surrogate settings: {exc}") from exc
    sols = run_method(
        method, data, model, seed=derive_seed(cfg.seed, name, method, level),
        out_n=cfg.out_n, nsga2=nsga2, resampler=resampler,
    )
    extra = {**prov, "method": method, "dataset_fingerprint": data.fingerprint}
    model_path = write_json(out.with_suffix(".model.json"), {**model.to_dict(), **prov})
    return [write_solutions(out, sols, data.problem, config_fingerprint=prov["config_fingerprint"], extra=extra), model_path]


def cmd_evaluate(args, cfg: RunConfig) -> list[Path]:
    """Metric report of ``--input`` against the front of its problem.

    ``--offline`` supplies the MMD+ reference sample. Objectives are rescaled
    by the pool in ``--scale-from`` when given, otherwise left raw.
    """
    points, problem = read_points(_need(args.input, "--input"))
    if problem is None:
        problem = cfg.problem()
    kernel = cfg.kernel_config()
    out = Path(_need(args.out, "--out"))
    scaler = ObjectiveScaler.identity(problem.m)
    if args.scale_from is not None:
        scaler = ObjectiveScaler.fit(read_dataset(args.scale_from).objectives)
    offline = None
    if args.offline is not None:
        offline = scaler(read_dataset(args.offline).objectives)
    z = scaler(front_discretization(problem, cfg.front_resolution).objectives)
    try:
        report = evaluate_set(scaler(points.objectives), z, offline=offline, kernel=kernel)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    prov = _provenance(cfg, "evaluate")
    payload = {
        "format": METRICS_FORMAT,
        "format_version": FORMAT_VERSION,
        "problem": problem.to_dict(),
        "scaler": scaler.to_dict(),
        "report": report.to_dict(),
        **prov,
    }
    return [write_json(out, payload)]


def cmd_grid(args, cfg: RunConfig) -> list[Path]:
    """Full experiment grid; writes summary JSON, CSV tables and figure data."""
    grid = cfg.grid()
    out_dir = Path(_need(args.out, "--out"))
    prov = _provenance(cfg, "grid")
    summary = run_grid(grid)
    paths = write_summary(summary, out_dir, config=prov["config"])
    paths.append(_write_resolved(out_dir, prov))
    if summary.incomplete:
        failed = [list(c.key) for c in summary.incomplete]
        raise ComputeError(f"{len(failed)} grid cells failed: {failed[:5]}")
    return paths


def _synthetic_lemma1(cfg: RunConfig) -> dict:
    rng = np.random.default_rng(derive_seed(cfg.seed, "verify", "lemma1"))
    margins = []
    for _ in range(cfg.synthetic_triples):
        m = int(rng.integers(2, 4))
        z = rng.random((int(rng.integers(2, 60)), m))
        alg = rng.normal(0.5, rng.uniform(0.05, 1.0), (int(rng.integers(1, 60)), m))
        off = rng.normal(0.5, rng.uniform(0.05, 1.0), (int(rng.integers(1, 60)), m))
        margins.append(lemma1_terms(alg, off, z).margin)
    return {"triples": len(margins), "min_margin": min(margins, default=0.0)}


def cmd_verify(args, cfg: RunConfig) -> list[Path]:
    """Shift-bound margins (synthetic, plus a grid summary if given) and the convergence sweep."""
    out = Path(_need(args.out, "--out"))
    spec = cfg.problem()
    sweep = convergence_sweep(spec, cfg.samples, cfg.resolutions, derive_seed(cfg.seed, spec.name, "verify"))
    checks = {
        "convergence_gaps_decreasing": sweep.gaps_strictly_decreasing,
        "convergence_within_1pct": sweep.relative_gap <= 0.01,
    }
    lemma = _synthetic_lemma1(cfg)
    checks["lemma1_synthetic"] = lemma["min_margin"] >= -1e-9
    grid_part = None
    if args.input is not None:
        summary = read_json(args.input, SUMMARY_FORMAT)
        margins = [c["lemma1_margin"] for c in summary.get("cells", []) if c.get("status") == "ok"]
        grid_part = {"cells": len(margins), "min_margin": min(margins, default=0.0)}
        checks["lemma1_grid"] = grid_part["min_margin"] >= -1e-9
    prov = _provenance(cfg, "verify")
    payload = {
        "format": REPORT_FORMAT,
        "format_version": FORMAT_VERSION,
        "convergence": sweep.to_dict(),
        "lemma1_synthetic": lemma,
        "lemma1_grid": grid_part,
        "checks": checks,
        "passed": all(checks.values()),
        **prov,
    }
    path = write_json(out, payload)
    if not payload["passed"]:
        raise ComputeError(f"verification failed: {[k for k, v in checks.items() if not v]}")
    return [path]


COMMANDS = {
    "gen": cmd_gen,
    "degrade": cmd_degrade,
    "optimize": cmd_optimize,
    "evaluate": cmd_evaluate,
    "grid": cmd_grid,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frontshift", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--task", help="problem family, e.g. zdt1 (comma-separated list for grid)")
        p.add_argument("--seed", type=int, help="root seed of this invocation")
        p.add_argument("--out", help="output file or directory")
        p.add_argument("--config", help="JSON or YAML settings file")
        p.add_argument("--preset", choices=sorted(PRESETS), help="named scale preset")
        return p

    p = add("gen", "sample a uniform offline dataset")
    p.add_argument("--n", type=int, help="number of designs")

    p = add("degrade", "build a shift suite, one dataset per level")
    p.add_argument("--levels", type=int, help="number of shift levels K")
    p.add_argument("--input", help="pool dataset to degrade instead of sampling one")

    p = add("optimize", "fit a surrogate and run one method on a dataset")
    p.add_argument("--input", help="offline dataset file")
    p.add_argument("--method", help=f"one of {', '.join(METHODS)}")

    p = add("evaluate", "compute the metric report of a solution or dataset file")
    p.add_argument("--input", help="solution set or dataset file")
    p.add_argument("--offline", help="offline dataset used as the MMD+ reference")
    p.add_argument("--scale-from", dest="scale_from", help="dataset whose range normalizes objectives")

    p = add("grid", "run a full experiment grid")
    p.add_argument("--method", help="comma-separated methods")
    p.add_argument("--seeds", help="number of seeds, or a comma-separated list")
    p.add_argument("--levels", type=int, help="number of shift levels K")
    p.add_argument("--run-levels", dest="run_levels", help="comma-separated subset of levels to run")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--normalize", choices=("pool", "none"))

    p = add("verify", "check the shift lower bound and front-discretization convergence")
    p.add_argument("--input", help="summary.json of a grid run to check as well")
    return parser


def _emit(stream, record: dict) -> None:
    stream.write(json.dumps(record, sort_keys=True) + "\n")


def _classify(exc: BaseException) -> tuple[int, str] | None:
    if isinstance(exc, (ConfigError, PoolExhaustedError)):
        return EXIT_CONFIG, "config_error"
    if isinstance(exc, DataError):
        return EXIT_DATA, "data_error"
    if isinstance(exc, (ComputeError, SurrogateFitError, ArithmeticError, np.linalg.LinAlgError)):
        return EXIT_COMPUTE, "compute_error"
    return None


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        paths = COMMANDS[args.command](args, cfg)
    except Exception as exc:
        kind = _classify(exc)
        if kind is None:
            raise
        _emit(sys.stderr, {"status": "error", "command": args.command, "code": kind[0], "kind": kind[1], "message": str(exc)})
        return kind[0]
    _emit(sys.stdout, {"status": "ok", "command": args.command, "outputs": [str(p) for p in paths]})
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
