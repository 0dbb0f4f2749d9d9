"""Experiment grids over (task, shift level, method, seed) and their analysis.

:func:`run_grid` builds one shift suite per (task, seed), fits one surrogate
per offline dataset, runs every method on it and scores the outputs against
the task's front discretization. Indicators are computed on objectives
rescaled by the task's undegraded pools (see :class:`ExperimentGrid`).

Seeds: every random stream in a grid is derived from ``root_seed`` by
:func:`derive_seed`, a SHA-256 hash of the labels of the stream, e.g.
``(root_seed, "zdt1", "suite", seed)`` for a shift suite and
``(root_seed, "zdt1", "evo-nsga2", level, seed)`` for a method run.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import defaultdict
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .metrics import (
    METRIC_KEYS,
    KernelConfig,
    ObjectiveScaler,
    default_reference_point,
    evaluate_set,
    fingerprint,
    hausdorff_distance,
    offline_frontier_shift,
)
from .optimizers import METHODS, Nsga2Config, ResamplerConfig, run_method
from .pareto import as_objectives
from .problems import (
    FrontDiscretization,
    OfflineDataset,
    ProblemSpec,
    front_discretization,
    make_problem,
    sample_offline_dataset,
)
from .shift_lab import DESK_POOL_SIZE, DESK_SCHEDULE, ShiftSchedule, build_pool, degrade, removal_order
from .surrogate import fit

# metrics where larger is better; the rest are minimized
_MAXIMIZED = frozenset({"hv"})


def derive_seed(*labels) -> int:
    """Deterministic 63-bit seed from a tuple of JSON-serializable labels."""
    digest = hashlib.sha256(json.dumps(list(labels)).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class ExperimentGrid:
    """Axes and settings of an experiment.

    Attributes:
        tasks: problems to run.
        methods: names from :data:`~frontshift.optimizers.METHODS`.
        seeds: distinct seed labels; each one gets its own shift suite.
        schedule: shift-suite shape. Its ``seed`` is ignored and re-derived
            per (task, seed).
        pool_size: size of each uniform pool.
        levels: shift levels to run, ``None`` for all of them.
        kernel: MMD+ settings.
        nsga2: settings of ``evo-nsga2`` (seed re-derived per cell).
        resampler: settings of ``gen-resampler`` (seed re-derived per cell).
        out_n: designs returned by every method.
        front_resolution: requested size of the front discretization.
        normalize: ``"pool"`` to min-max scale objectives by the union of
            the task's pools, ``"none"`` for raw objectives.
        root_seed: root of every derived seed.
        workers: worker processes; 1 runs in-process.
    """

    tasks: tuple[ProblemSpec, ...]
    methods: tuple[str, ...] = METHODS
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    schedule: ShiftSchedule = DESK_SCHEDULE
    pool_size: int = DESK_POOL_SIZE
    levels: tuple[int, ...] | None = None
    kernel: KernelConfig = KernelConfig()
    nsga2: Nsga2Config = Nsga2Config()
    resampler: ResamplerConfig = ResamplerConfig()
    out_n: int = 256
    front_resolution: int = 10_000
    normalize: str = "pool"
    root_seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        for name in ("tasks", "methods", "seeds"):
            value = tuple(getattr(self, name))
            if not value:
                raise ValueError(f"grid axis {name!r} is empty")
            object.__setattr__(self, name, value)
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError(f"seeds must be distinct, got {self.seeds}")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}; expected {METHODS}")
        if len({t.name for t in self.tasks}) != len(self.tasks):
            raise ValueError("task names must be distinct")
        if self.levels is not None:
            levels = tuple(sorted(set(int(k) for k in self.levels)))
            if not levels or levels[0] < 0 or levels[-1] >= self.schedule.levels:
                raise ValueError(f"levels must lie in 0..{self.schedule.levels - 1}")
            object.__setattr__(self, "levels", levels)
        if self.pool_size < self.schedule.min_pool_size():
            raise ValueError(
                f"pool_size {self.pool_size} < {self.schedule.min_pool_size()} required by the schedule"
            )
        if self.out_n < 1 or self.out_n > self.nsga2.population:
            raise ValueError(f"out_n must lie in 1..{self.nsga2.population}")
        if self.front_resolution < 2:
            raise ValueError("front_resolution must be >= 2")
        if self.normalize not in ("pool", "none"):
            raise ValueError(f"normalize must be 'pool' or 'none', got {self.normalize!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def run_levels(self) -> tuple[int, ...]:
        return tuple(range(self.schedule.levels)) if self.levels is None else self.levels

    def to_dict(self) -> dict:
        """Resolved configuration; ``workers`` is omitted as it does not affect results."""
        return {
            "tasks": [t.to_dict() for t in self.tasks],
            "methods": list(self.methods),
            "seeds": list(self.seeds),
            "schedule": {k: v for k, v in self.schedule.to_dict().items() if k != "seed"},
            "pool_size": self.pool_size,
            "levels": list(self.run_levels),
            "kernel": self.kernel.to_dict(),
            "nsga2": {k: v for k, v in self.nsga2.to_dict().items() if k != "seed"},
            "resampler": {k: v for k, v in self.resampler.to_dict().items() if k != "seed"},
            "out_n": self.out_n,
            "front_resolution": self.front_resolution,
            "normalize": self.normalize,
            "root_seed": self.root_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentGrid:
        d = dict(d)
        tasks = tuple(
            make_problem(t) if isinstance(t, str) else make_problem(t["family"], t.get("d"), t.get("m"))
            for t in d.pop("tasks")
        )
        schedule = ShiftSchedule(**d.pop("schedule", DESK_SCHEDULE.to_dict()))
        kernel = KernelConfig(**d.pop("kernel", {}))
        nsga2 = Nsga2Config(**d.pop("nsga2", {}))
        resampler = ResamplerConfig(**d.pop("resampler", {}))
        for key in ("methods", "seeds", "levels"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(tasks=tasks, schedule=schedule, kernel=kernel, nsga2=nsga2, resampler=resampler, **d)

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.to_dict())


@dataclass
class CellResult:
    """Outcome of one (task, level, method, seed) cell.

    ``metrics`` holds the :data:`~frontshift.metrics.METRIC_KEYS` values and
    is ``None`` when the cell failed, in which case ``error`` says why.
    ``offline_shift`` is the shift of the cell's offline dataset.
    """

    task: str
    method: str
    level: int
    seed: int
    status: str
    metrics: dict[str, float] | None = None
    offline_shift: float = math.nan
    lemma1_margin: float = math.nan
    method_seed: int = 0
    surrogate_ridge: list[float] | None = None
    report: dict | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def key(self) -> tuple[str, str, int, int]:
        return (self.task, self.method, self.level, self.seed)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CorrelationReport:
    """Pearson and Spearman correlation with bootstrap intervals.

    When either series has zero variance ``defined`` is False, the
    coefficients are NaN and ``reason`` explains why.
    """

    pearson: float
    spearman: float
    n: int
    defined: bool = True
    reason: str = ""
    pearson_ci: tuple[float, float] = (math.nan, math.nan)
    spearman_ci: tuple[float, float] = (math.nan, math.nan)
    confidence: float = 0.9
    n_boot: int = 0
    boot_seed: int = 0

    def __iter__(self):
        # unpacks as (pearson, spearman)
        return iter((self.pearson, self.spearman))

    def to_dict(self) -> dict:
        return asdict(self)


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return math.nan, math.nan
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


@dataclass
class DiagnosticsSummary:
    """Cell table plus everything derived from it.

    Attributes:
        grid: resolved grid configuration.
        cells: one entry per (task, level, method, seed), sorted by key.
        scalers: objective scaling per task name.
        reference_points: hypervolume reference point per task name.
        front_resolutions: actual front discretization size per task.
    """

    grid: dict
    cells: list[CellResult]
    scalers: dict[str, dict] = field(default_factory=dict)
    reference_points: dict[str, list[float]] = field(default_factory=dict)
    front_resolutions: dict[str, int] = field(default_factory=dict)

    @property
    def ok_cells(self) -> list[CellResult]:
        return [c for c in self.cells if c.ok]

    @property
    def incomplete(self) -> list[CellResult]:
        return [c for c in self.cells if not c.ok]

    @property
    def complete(self) -> bool:
        return not self.incomplete

    def _groups(self) -> dict[tuple[str, str, int], list[CellResult]]:
        groups: dict[tuple[str, str, int], list[CellResult]] = defaultdict(list)
        for c in self.ok_cells:
            groups[(c.task, c.method, c.level)].append(c)
        return groups

    def aggregates(self) -> list[dict]:
        """Mean and sample std over seeds per (task, method, level)."""
        rows = []
        for (task, method, level), cells in sorted(self._groups().items()):
            row: dict = {"task": task, "method": method, "level": level, "n": len(cells)}
            for key in METRIC_KEYS:
                row[f"{key}_mean"], row[f"{key}_std"] = _mean_std([c.metrics[key] for c in cells])
            row["offline_shift_mean"], row["offline_shift_std"] = _mean_std([c.offline_shift for c in cells])
            rows.append(row)
        return rows

    def delta_gd_plus(self) -> list[dict]:
        """Mean GD+ at each level minus mean GD+ at level 0, per task and method."""
        means = {
            key: float(np.mean([c.metrics["gd_plus"] for c in cells])) for key, cells in self._groups().items()
        }
        rows = []
        for (task, method, level), value in sorted(means.items()):
            base = means.get((task, method, 0))
            delta = value - base if base is not None else math.nan
            rows.append({"task": task, "method": method, "level": level, "delta_gd_plus": delta})
        return rows

    def pooled_delta_gd_plus(self) -> list[dict]:
        """Per (method, level): mean over tasks of the per-task ΔGD+."""
        acc: dict[tuple[str, int], list[float]] = defaultdict(list)
        for row in self.delta_gd_plus():
            acc[(row["method"], row["level"])].append(row["delta_gd_plus"])
        return [
            {"method": method, "level": level, "delta_gd_plus": float(np.mean(v)), "n_tasks": len(v)}
            for (method, level), v in sorted(acc.items())
        ]

    def pooled_means(self, metric: str) -> dict[tuple[str, int], float]:
        """Per (method, level): mean over tasks of the per-task seed mean of ``metric``."""
        acc: dict[tuple[str, int], list[float]] = defaultdict(list)
        for (_, method, level), cells in sorted(self._groups().items()):
            acc[(method, level)].append(float(np.mean([c.metrics[metric] for c in cells])))
        return {k: float(np.mean(v)) for k, v in acc.items()}

    def lemma1_margins(self) -> list[float]:
        return [c.lemma1_margin for c in self.ok_cells]

    def offline_shift_curve(self) -> list[dict]:
        """Mean offline-dataset shift per (task, level) over seeds."""
        acc: dict[tuple[str, int], dict[int, float]] = defaultdict(dict)
        for c in self.ok_cells:
            acc[(c.task, c.level)][c.seed] = c.offline_shift
        return [
            {"task": task, "level": level, "offline_shift": float(np.mean(list(v.values()))), "n": len(v)}
            for (task, level), v in sorted(acc.items())
        ]

    def best_methods(self) -> list[dict]:
        """Per (task, level, metric): the method with the best mean over seeds."""
        rows = []
        by_tl: dict[tuple[str, int], list[dict]] = defaultdict(list)
        for row in self.aggregates():
            by_tl[(row["task"], row["level"])].append(row)
        for (task, level), group in sorted(by_tl.items()):
            for key in METRIC_KEYS:
                scored = [(r[f"{key}_mean"], r["method"]) for r in group if np.isfinite(r[f"{key}_mean"])]
                if not scored:
                    continue
                value, method = max(scored) if key in _MAXIMIZED else min(scored)
                rows.append({"task": task, "level": level, "metric": key, "method": method, "mean": value})
        return rows

    def figure1(self) -> list[dict]:
        """Offline shift (x) against pooled ΔGD+ (y) per method and level."""
        shift = defaultdict(list)
        for row in self.offline_shift_curve():
            shift[row["level"]].append(row["offline_shift"])
        return [
            {
                "method": row["method"],
                "level": row["level"],
                "x_offline_shift": float(np.mean(shift[row["level"]])),
                "y_delta_gd_plus": row["delta_gd_plus"],
            }
            for row in self.pooled_delta_gd_plus()
        ]

    def figure2(self) -> list[dict]:
        """MMD+ (x) against GD+ (y) per method and level, averaged over tasks and seeds."""
        mmd = self.pooled_means("mmd_plus")
        err = self.pooled_means("gd_plus")
        return [
            {"method": method, "level": level, "x_mmd_plus": mmd[(method, level)], "y_gd_plus": err[(method, level)]}
            for method, level in sorted(mmd)
        ]

    def figure2_cells(self) -> list[dict]:
        return [
            {
                "task": c.task,
                "method": c.method,
                "level": c.level,
                "seed": c.seed,
                "x_mmd_plus": c.metrics["mmd_plus"],
                "y_gd_plus": c.metrics["gd_plus"],
            }
            for c in self.ok_cells
        ]

    def cell_rows(self) -> list[dict]:
        rows = []
        for c in self.cells:
            row = {"task": c.task, "method": c.method, "level": c.level, "seed": c.seed, "status": c.status}
            for key in METRIC_KEYS:
                row[key] = c.metrics[key] if c.metrics else math.nan
            row["offline_shift"] = c.offline_shift
            row["lemma1_margin"] = c.lemma1_margin
            row["error"] = c.error or ""
            rows.append(row)
        return rows

    def tables(self) -> dict[str, list[dict]]:
        """Every CSV table keyed by file stem."""
        return {
            "cells": self.cell_rows(),
            "aggregates": self.aggregates(),
            "delta_gd_plus": self.delta_gd_plus(),
            "best_methods": self.best_methods(),
            "figure1": self.figure1(),
            "figure2": self.figure2(),
            "figure2_cells": self.figure2_cells(),
        }

    def to_dict(self, *, correlation: bool = True) -> dict:
        out = {
            "grid": self.grid,
            "grid_fingerprint": fingerprint(self.grid),
            "complete": self.complete,
            "incomplete": [list(c.key) for c in self.incomplete],
            "scalers": self.scalers,
            "reference_points": self.reference_points,
            "front_resolutions": self.front_resolutions,
            "cells": [c.to_dict() for c in self.cells],
            "pooled_delta_gd_plus": self.pooled_delta_gd_plus(),
            "offline_shift": self.offline_shift_curve(),
            "lemma1_min_margin": min(self.lemma1_margins(), default=math.nan),
        }
        if correlation:
            try:
                out["correlation"] = correlate(self).to_dict()
            except ValueError as exc:
                out["correlation"] = {"defined": False, "reason": str(exc)}
        return out


# --------------------------------------------------------------------------
# shift lower bound


@dataclass(frozen=True)
class Lemma1Terms:
    """Terms of ``s_alg >= s_off - d`` where ``d`` compares mean squared projection distances."""

    s_alg: float
    s_off: float
    ipm: float
    margin: float


def _projection_sq(points: np.ndarray, front: np.ndarray, block: int = 1 << 22) -> np.ndarray:
    """Squared distance to the nearest front point by blocked brute force."""
    out = np.empty(points.shape[0])
    f2 = np.einsum("ij,ij->i", front, front)
    rows = max(1, block // front.shape[0])
    for start in range(0, points.shape[0], rows):
        p = points[start : start + rows]
        d2 = np.einsum("ij,ij->i", p, p)[:, None] - 2.0 * p @ front.T + f2[None, :]
        out[start : start + rows] = np.maximum(d2.min(axis=1), 0.0)
    return out


def lemma1_terms(P_alg, P_off, Z) -> Lemma1Terms:
    """Both shifts, their discrepancy ``d`` and the bound margin.

    ``d`` is the absolute difference of the mean squared projection distance
    under the two samples. It is computed by an independent brute-force
    projection, so a wrong :func:`offline_frontier_shift` shows up as a
    negative margin.
    """
    alg, off, z = as_objectives(P_alg), as_objectives(P_off), as_objectives(Z)
    if alg.shape[0] == 0 or off.shape[0] == 0:
        raise ValueError("point sets must be non-empty")
    s_alg = offline_frontier_shift(alg, z)
    s_off = offline_frontier_shift(off, z)
    ipm = abs(float(np.mean(_projection_sq(alg, z))) - float(np.mean(_projection_sq(off, z))))
    return Lemma1Terms(s_alg, s_off, ipm, s_alg - (s_off - ipm))


def verify_lemma1(P_alg, P_off, Z) -> float:
    """Margin ``s_alg − (s_off − d)`` of the shift lower bound; non-negative up to rounding."""
    return lemma1_terms(P_alg, P_off, Z).margin


# --------------------------------------------------------------------------
# correlation


def _rowwise_pearson(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    xc = x - x.mean(axis=1, keepdims=True)
    yc = y - y.mean(axis=1, keepdims=True)
    den = np.sqrt((xc * xc).sum(axis=1) * (yc * yc).sum(axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, (xc * yc).sum(axis=1) / den, np.nan)


def correlation(
    x, y, *, n_boot: int = 1000, seed: int = 0, confidence: float = 0.9
) -> CorrelationReport:
    """Pearson and Spearman correlation of paired samples with a percentile bootstrap.

    Resamples where either series is constant are dropped from the bootstrap.

    Raises:
        ValueError: fewer than 3 finite pairs or mismatched lengths.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D and of equal length")
    keep = np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    n = x.size
    if n < 3:
        raise ValueError(f"need at least 3 finite pairs, got {n}")
    flat = [name for name, v in (("x", x), ("y", y)) if np.ptp(v) == 0]
    if flat:
        return CorrelationReport(
            math.nan, math.nan, n, defined=False, reason=f"zero variance in {' and '.join(flat)}",
            confidence=confidence, boot_seed=seed,
        )
    pearson = float(stats.pearsonr(x, y).statistic)
    spearman = float(stats.spearmanr(x, y).statistic)

    report = CorrelationReport(pearson, spearman, n, confidence=confidence, n_boot=n_boot, boot_seed=seed)
    if n_boot > 0:
        idx = np.random.default_rng(seed).integers(0, n, size=(n_boot, n))
        xs, ys = x[idx], y[idx]
        p_boot = _rowwise_pearson(xs, ys)
        s_boot = _rowwise_pearson(stats.rankdata(xs, axis=1), stats.rankdata(ys, axis=1))
        tail = 100.0 * (1.0 - confidence) / 2.0
        for name, boot in (("pearson_ci", p_boot), ("spearman_ci", s_boot)):
            boot = boot[np.isfinite(boot)]
            if boot.size:
                lo, hi = np.percentile(boot, [tail, 100.0 - tail])
                setattr(report, name, (float(lo), float(hi)))
    return report


def correlate(
    summary: DiagnosticsSummary,
    *,
    tasks: Sequence[str] | None = None,
    n_boot: int = 1000,
    seed: int = 0,
    confidence: float = 0.9,
) -> CorrelationReport:
    """Correlation between MMD+ and GD+ across completed cells (optionally some tasks only)."""
    cells = [c for c in summary.ok_cells if tasks is None or c.task in tasks]
    x = [c.metrics["mmd_plus"] for c in cells]
    y = [c.metrics["gd_plus"] for c in cells]
    return correlation(x, y, n_boot=n_boot, seed=seed, confidence=confidence)


# --------------------------------------------------------------------------
# discretization convergence


@dataclass(frozen=True)
class ConvergenceReport:
    """Shift of one sample against increasingly fine front discretizations."""

    resolutions: tuple[int, ...]
    shifts: tuple[float, ...]
    gaps: tuple[float, ...]
    hausdorff: tuple[float, ...]

    @property
    def gaps_strictly_decreasing(self) -> bool:
        g = self.gaps[:-1]
        return all(a > b for a, b in zip(g, g[1:]))

    @property
    def relative_gap(self) -> float:
        """Relative gap of the second-finest discretization."""
        return self.gaps[-2] / self.shifts[-1] if len(self.gaps) > 1 else 0.0

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(gaps_strictly_decreasing=self.gaps_strictly_decreasing, relative_gap=self.relative_gap)
        return out


def convergence_sweep(
    spec: ProblemSpec | None = None,
    n_samples: int = 1_000,
    resolutions: Sequence[int] = (10, 100, 1_000, 10_000),
    seed: int = 0,
    *,
    normalize: bool = True,
) -> ConvergenceReport:
    """Shift of a uniform sample against front discretizations of growing size.

    With ``normalize`` both sample and fronts are min-max scaled by the
    sample. On raw ZDT scales every uniform design projects onto the same
    front endpoint, which makes the sweep uninformative.

    ``gaps`` are distances to the finest shift; ``hausdorff`` are distances
    of each discretization to the finest one.
    """
    spec = make_problem("zdt1") if spec is None else spec
    res = tuple(sorted(int(r) for r in resolutions))
    if len(res) < 2:
        raise ValueError("need at least two resolutions")
    sample = sample_offline_dataset(spec, n_samples, seed).objectives
    scaler = ObjectiveScaler.fit(sample) if normalize else ObjectiveScaler.identity(spec.m)
    fronts = [scaler(front_discretization(spec, r)) for r in res]
    shifts = tuple(offline_frontier_shift(scaler(sample), z) for z in fronts)
    return ConvergenceReport(
        resolutions=tuple(len(z) for z in fronts),
        shifts=shifts,
        gaps=tuple(abs(s - shifts[-1]) for s in shifts),
        hausdorff=tuple(hausdorff_distance(z, fronts[-1]) for z in fronts),
    )


def shift_curve(
    spec: ProblemSpec,
    schedule: ShiftSchedule = DESK_SCHEDULE,
    pool_size: int = DESK_POOL_SIZE,
    *,
    front_resolution: int = 10_000,
    normalize: bool = True,
) -> np.ndarray:
    """Offline-frontier shift of every level of one shift suite.

    With ``normalize`` objectives and front are min-max scaled by the
    suite's undegraded pool, as in :func:`run_grid`.
    """
    pool = build_pool(spec, pool_size, schedule.seed)
    order = removal_order(pool, schedule.seed)
    scaler = ObjectiveScaler.fit(pool.objectives) if normalize else ObjectiveScaler.identity(spec.m)
    z = scaler(front_discretization(spec, front_resolution))
    return np.array(
        [offline_frontier_shift(scaler(degrade(pool, schedule, k, order=order).objectives), z) for k in range(schedule.levels)]
    )


# --------------------------------------------------------------------------
# grid execution


def _run_job(job: dict) -> list[CellResult]:
    """All methods on one offline dataset, sharing one surrogate."""
    data: OfflineDataset = job["data"]
    scaler = ObjectiveScaler.from_dict(job["scaler"])
    z = job["front"]
    off = scaler(data.objectives)
    base = {"task": data.problem.name, "level": data.shift_level, "seed": job["seed"]}
    try:
        offline_shift = offline_frontier_shift(off, z)
        model = fit(data, seed=job["surrogate_seed"])
    except Exception as exc:  # noqa: BLE001 - recorded per cell
        error = f"{type(exc).__name__}: {exc}"
        return [
            CellResult(method=m, status="failed", method_seed=s, error=error, **base)
            for m, s in job["methods"]
        ]
    cells = []
    for method, method_seed in job["methods"]:
        try:
            result = run_method(
                method, data, model, seed=method_seed, out_n=job["out_n"],
                nsga2=job["nsga2"], resampler=job["resampler"],
            )
            a = scaler(result.objectives)
            report = evaluate_set(a, z, offline=off, reference_point=job["reference_point"], kernel=job["kernel"])
            values = report.values()
            if not all(math.isfinite(v) for v in values.values()):
                raise FloatingPointError(f"non-finite metrics {values}")
            cells.append(
                CellResult(
                    method=method,
                    status="ok",
                    metrics=values,
                    offline_shift=offline_shift,
                    lemma1_margin=verify_lemma1(a, off, z),
                    method_seed=method_seed,
                    surrogate_ridge=model.ridge.tolist(),
                    report=report.to_dict(),
                    **base,
                )
            )
        except Exception as exc:  # noqa: BLE001 - recorded per cell
            cells.append(
                CellResult(
                    method=method, status="failed", offline_shift=offline_shift, method_seed=method_seed,
                    error=f"{type(exc).__name__}: {exc}", **base,
                )
            )
    return cells


def _task_setup(grid: ExperimentGrid, task: ProblemSpec):
    """Datasets per (seed, level), the task scaler, HV reference and scaled front."""
    datasets: dict[tuple[int, int], OfflineDataset] = {}
    pools = []
    for seed in grid.seeds:
        schedule = ShiftSchedule(
            levels=grid.schedule.levels,
            removal_per_level=grid.schedule.removal_per_level,
            resample_size=grid.schedule.resample_size,
            seed=derive_seed(grid.root_seed, task.name, "suite", seed),
        )
        pool = build_pool(task, grid.pool_size, schedule.seed)
        pools.append(pool.objectives)
        order = removal_order(pool, schedule.seed)
        for level in grid.run_levels:
            datasets[(seed, level)] = degrade(pool, schedule, level, order=order)
    if grid.normalize == "pool":
        scaler = ObjectiveScaler.fit(np.vstack(pools))
    else:
        scaler = ObjectiveScaler.identity(task.m)
    front: FrontDiscretization = front_discretization(task, grid.front_resolution)
    scaled = np.vstack([scaler(d.objectives) for d in datasets.values()])
    ref = default_reference_point(scaled)
    return datasets, scaler, ref, scaler(front.objectives)


def run_grid(grid: ExperimentGrid) -> DiagnosticsSummary:
    """Run every cell of ``grid`` and collect the results.

    Cell failures are recorded (``status="failed"``) without stopping the
    grid. Results do not depend on ``grid.workers``.
    """
    jobs = []
    scalers, refs, resolutions = {}, {}, {}
    for task in grid.tasks:
        datasets, scaler, ref, z = _task_setup(grid, task)
        scalers[task.name] = scaler.to_dict()
        refs[task.name] = ref.tolist()
        resolutions[task.name] = int(len(z))
        for (seed, level), data in datasets.items():
            jobs.append(
                {
                    "data": data,
                    "seed": seed,
                    "scaler": scaler.to_dict(),
                    "front": z,
                    "reference_point": ref,
                    "surrogate_seed": derive_seed(grid.root_seed, task.name, "surrogate", level, seed),
                    "methods": [
                        (m, derive_seed(grid.root_seed, task.name, m, level, seed)) for m in grid.methods
                    ],
                    "out_n": grid.out_n,
                    "nsga2": grid.nsga2,
                    "resampler": grid.resampler,
                    "kernel": grid.kernel,
                }
            )
    if grid.workers > 1:
        with ProcessPoolExecutor(max_workers=grid.workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(job) for job in jobs]
    cells = sorted((c for batch in results for c in batch), key=lambda c: c.key)
    return DiagnosticsSummary(
        grid=grid.to_dict(), cells=cells, scalers=scalers, reference_points=refs, front_resolutions=resolutions
    )


def desk_grid(tasks: Sequence[str] = ("zdt1", "zdt2", "zdt3"), **overrides) -> ExperimentGrid:
    """Laptop-sized grid: pool 7,000, 1,000 removed per level, 6 levels, 5 seeds."""
    return ExperimentGrid(tasks=tuple(make_problem(t) for t in tasks), **overrides)


__all__ = [
    "CellResult",
    "ConvergenceReport",
    "CorrelationReport",
    "DiagnosticsSummary",
    "ExperimentGrid",
    "Lemma1Terms",
    "convergence_sweep",
    "correlate",
    "correlation",
    "derive_seed",
    "desk_grid",
    "lemma1_terms",
    "run_grid",
    "shift_curve",
    "verify_lemma1",
]
