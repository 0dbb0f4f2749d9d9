"""End-to-end acceptance criteria; each test prints one PASS/FAIL line.

The desk-scale grid is shared by criteria 4, 6 and 7 and takes about two
minutes on one core.
"""

import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from frontshift import metrics
from frontshift.cli import main
from frontshift.diagnostics import (
    convergence_sweep,
    correlate,
    desk_grid,
    lemma1_terms,
    run_grid,
    shift_curve,
)
from frontshift.io import read_dataset, write_dataset
from frontshift.pareto import dominates, fast_nondominated_sort
from frontshift.problems import FAMILIES, front_discretization, make_problem, sample_offline_dataset
from frontshift.shift_lab import DESK_POOL_SIZE, DESK_SCHEDULE, ShiftSchedule

ZDT_TASKS = ("zdt1", "zdt2", "zdt3")


@pytest.fixture(scope="module")
def desk():
    start = time.perf_counter()
    summary = run_grid(desk_grid(ZDT_TASKS))
    return summary, time.perf_counter() - start


def mc_hypervolume_2d(points: np.ndarray, ref: np.ndarray, n: int, rng) -> tuple[float, float]:
    """Monte-Carlo HV over the box [min(points), ref]; returns (estimate, standard error).

    A sample (u, v) is dominated iff the best f1 among points with f0 <= u is <= v.
    """
    lo = points.min(axis=0)
    box = float(np.prod(ref - lo))
    order = np.argsort(points[:, 0], kind="stable")
    f0 = points[order, 0]
    best_f1 = np.minimum.accumulate(points[order, 1])
    u = rng.uniform(lo[0], ref[0], n)
    v = rng.uniform(lo[1], ref[1], n)
    idx = np.searchsorted(f0, u, side="right") - 1
    hit = (idx >= 0) & (best_f1[np.maximum(idx, 0)] <= v)
    p = hit.mean()
    return box * p, box * np.sqrt(p * (1 - p) / n)


def test_criterion_1_metric_oracles(verdict):
    rng = np.random.default_rng(2024)
    worst = 0.0
    hv_misses = []
    hv_checked = 0
    elapsed = 0.0
    for i in range(200):
        m = 2 if i % 2 == 0 else 3
        A = rng.random((int(rng.integers(1, 101)), m))
        Z = rng.random((int(rng.integers(1, 101)), m))
        start = time.perf_counter()
        got = [metrics.gd(A, Z), metrics.igd(A, Z), metrics.gd_plus(A, Z), metrics.igd_plus(A, Z)]
        elapsed += time.perf_counter() - start
        a, z = A.tolist(), Z.tolist()
        want = [oracles.gd(a, z), oracles.igd(a, z), oracles.gd_plus(a, z), oracles.igd_plus(a, z)]
        worst = max(worst, max(abs(g - w) for g, w in zip(got, want)))
        if m == 2:
            ref = A.max(axis=0) + 0.1
            start = time.perf_counter()
            hv = metrics.hypervolume(A, ref)
            elapsed += time.perf_counter() - start
            est, se = mc_hypervolume_2d(A, ref, 1_000_000, rng)
            hv_checked += 1
            if abs(hv - est) > 3 * se:
                hv_misses.append((i, hv, est, se))
    ok = worst <= 1e-10 and not hv_misses and elapsed < 5.0
    detail = f"max |lib-oracle|={worst:.2e}, HV outside 3 SE: {len(hv_misses)}/{hv_checked}, library time {elapsed:.2f}s"
    verdict(1, "distance metrics match brute force, 2-D HV matches Monte-Carlo", ok, detail)


def test_criterion_2_plus_metrics_ignore_improvements(verdict):
    rng = np.random.default_rng(7)
    checks = []
    for _ in range(100):
        m = int(rng.integers(2, 4))
        Z = rng.random((int(rng.integers(2, 50)), m))
        # every A point weakly dominates some Z point
        A = Z[rng.integers(0, len(Z), int(rng.integers(1, 50)))] - rng.random((1, m)) * rng.random()
        checks.append(metrics.gd_plus(A, Z) == 0.0)
        checks.append(metrics.gd(A, Z) >= 0.0)
        # every Z point is weakly dominated by some A point
        B = np.vstack([Z - 0.05, rng.random((5, m)) + 1.0])
        checks.append(metrics.igd_plus(B, Z) == 0.0 and metrics.igd(B, Z) > 0.0)
    strict = np.array([[0.0, 0.0]]), np.array([[1.0, 1.0]])
    gd_positive = metrics.gd(*strict) > 0 and metrics.gd_plus(*strict) == 0.0
    worse = metrics.gd_plus(np.array([[2.0, 2.0]]), np.array([[1.0, 1.0]])) > 0
    ok = all(checks) and gd_positive and worse
    verdict(2, "GD+/IGD+ are zero for dominating sets while GD/IGD are not", ok, f"{sum(checks)}/{len(checks)} checks")


def test_criterion_3_discretization_convergence(verdict):
    start = time.perf_counter()
    report = convergence_sweep(make_problem("zdt1"), 1000, (10, 100, 1000, 10000), seed=0)
    elapsed = time.perf_counter() - start
    ok = report.gaps_strictly_decreasing and report.relative_gap <= 0.01 and elapsed < 10.0
    gaps = ", ".join(f"{g:.3g}" for g in report.gaps)
    verdict(3, "shift converges as the front discretization refines", ok,
            f"gaps {gaps}; s_1000 rel. gap {report.relative_gap:.2e}; {elapsed:.2f}s")


def test_criterion_4_shift_lower_bound(verdict, desk):
    summary, _ = desk
    grid_margins = summary.lemma1_margins()
    rng = np.random.default_rng(99)
    synthetic = []
    for _ in range(1000):
        m = int(rng.integers(2, 4))
        z = rng.random((int(rng.integers(1, 60)), m))
        alg = rng.normal(0.5, rng.uniform(0.05, 1.0), (int(rng.integers(1, 60)), m))
        off = rng.normal(0.5, rng.uniform(0.05, 1.0), (int(rng.integers(1, 60)), m))
        synthetic.append(lemma1_terms(alg, off, z).margin)
    ok = (
        len(grid_margins) == len(summary.cells)
        and min(grid_margins) >= -1e-9
        and min(synthetic) >= -1e-9
    )
    verdict(4, "shift lower-bound margin is non-negative on the grid and synthetic triples", ok,
            f"grid min {min(grid_margins):.2e} over {len(grid_margins)} cells, synthetic min {min(synthetic):.2e}")


def test_criterion_5_shift_monotonicity(verdict):
    rates, slopes = {}, {}
    for task in ZDT_TASKS:
        spec = make_problem(task)
        curves = [
            shift_curve(spec, ShiftSchedule(DESK_SCHEDULE.levels, DESK_SCHEDULE.removal_per_level,
                                            DESK_SCHEDULE.resample_size, seed=s), DESK_POOL_SIZE)
            for s in range(20)
        ]
        rates[task] = float(np.mean([np.all(np.diff(c) > 0) for c in curves]))
        levels = np.arange(DESK_SCHEDULE.levels)
        slopes[task] = float(np.polyfit(levels, np.mean(curves, axis=0), 1)[0])
    ok = all(r >= 0.95 for r in rates.values()) and all(s > 0 for s in slopes.values())
    detail = ", ".join(f"{t}: {rates[t]:.0%} increasing, slope {slopes[t]:.3g}" for t in ZDT_TASKS)
    verdict(5, "offline shift increases with degradation level", ok, detail)


def test_criterion_6_method_separation(verdict, desk):
    summary, elapsed = desk
    top = DESK_SCHEDULE.levels - 1
    delta = {r["method"]: r["delta_gd_plus"] for r in summary.pooled_delta_gd_plus() if r["level"] == top}
    mmd = summary.pooled_means("mmd_plus")
    mmd_top = {method: mmd[(method, top)] for method in ("evo-nsga2", "gen-resampler")}
    ok = (
        summary.complete
        and delta["gen-resampler"] >= delta["evo-nsga2"]
        and mmd_top["evo-nsga2"] >= mmd_top["gen-resampler"]
        and elapsed < 600
    )
    detail = (
        f"dGD+ gen {delta['gen-resampler']:.4f} vs evo {delta['evo-nsga2']:.4f}; "
        f"MMD+ evo {mmd_top['evo-nsga2']:.3f} vs gen {mmd_top['gen-resampler']:.3f}; grid {elapsed:.0f}s"
    )
    verdict(6, "resampler degrades more under shift, NSGA-II moves further from the data", ok, detail)


def test_criterion_7_correlation_sign(verdict, desk):
    summary, _ = desk
    report = correlate(summary, n_boot=1000, seed=0, confidence=0.9)
    lo, hi = report.spearman_ci
    ok = report.defined and report.spearman < 0 and hi < 0
    verdict(7, "MMD+ and GD+ are negatively correlated across cells", ok,
            f"spearman {report.spearman:.3f}, 90% CI ({lo:.3f}, {hi:.3f}), n={report.n}")


# --------------------------------------------------------------------------
# criterion 8: property suites

points_2_3 = st.integers(2, 3).flatmap(
    lambda m: arrays(np.float64, st.tuples(st.integers(1, 200), st.just(m)), elements=st.integers(0, 6).map(float))
)
vector = arrays(np.float64, 3, elements=st.integers(0, 3).map(float))


@settings(max_examples=300)
@given(vector, vector, vector)
def check_dominance_laws(a, b, c):
    assert not dominates(a, a)
    assert not (dominates(a, b) and dominates(b, a))
    if dominates(a, b) and dominates(b, c):
        assert dominates(a, c)
    assert dominates(a, b) == oracles.dominates(a.tolist(), b.tolist())


@settings(max_examples=40)
@given(points_2_3)
def check_sort_matches_brute_force(points):
    got = [sorted(f.tolist()) for f in fast_nondominated_sort(points).fronts]
    assert got == oracles.fronts(points.tolist())


def check_fronts_are_antichains():
    for family in FAMILIES:
        z = front_discretization(make_problem(family), 500).points
        le = np.all(z[:, None, :] <= z[None, :, :], axis=2)
        lt = np.any(z[:, None, :] < z[None, :, :], axis=2)
        assert not np.any(le & lt), family


def check_dataset_round_trip(tmp_path):
    for family in FAMILIES:
        data = sample_offline_dataset(make_problem(family), 200, seed=11)
        back = read_dataset(write_dataset(tmp_path / f"{family}.csv", data))
        assert np.max(np.abs(back.designs - data.designs)) <= 1e-12
        assert np.max(np.abs(back.objectives - data.objectives)) <= 1e-12


def check_grid_runs_identical(tmp_path, capsys):
    config = tmp_path / "grid.json"
    config.write_text(
        '{"tasks": ["zdt1", "zdt2"], "seeds": [0, 1], "pool_size": 400, "out_n": 16, "front_resolution": 500,'
        ' "schedule": {"levels": 3, "removal_per_level": 100, "resample_size": 100},'
        ' "nsga2": {"population": 16, "generations": 3}}'
    )
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["grid", "--config", str(config), "--seed", "5", "--out", str(out)]) == 0
        runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    capsys.readouterr()
    assert runs[0].keys() == runs[1].keys() and "summary.json" in runs[0]
    assert runs[0] == runs[1]


def test_criterion_8_property_suites(verdict, tmp_path, capsys):
    checks = {
        "dominance laws": check_dominance_laws,
        "sort vs brute force": check_sort_matches_brute_force,
        "front anti-chains": check_fronts_are_antichains,
        "dataset round trip": lambda: check_dataset_round_trip(tmp_path),
        "byte-identical grid runs": lambda: check_grid_runs_identical(tmp_path, capsys),
    }
    failed = []
    for name, check in checks.items():
        try:
            check()
        except Exception as exc:  # noqa: BLE001 - reported in the verdict
            failed.append(f"{name}: {type(exc).__name__} {exc}"[:200])
    verdict(8, "property suites", not failed, "; ".join(failed) or f"{len(checks)} suites")
