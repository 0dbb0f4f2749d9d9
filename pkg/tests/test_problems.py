import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from frontshift.metrics import hausdorff_distance, offline_frontier_shift
from frontshift.pareto import dominance_matrix, nondominated_mask
from frontshift.problems import (
    DTLZ_FAMILIES,
    FAMILIES,
    ZDT6_F1_MIN,
    ZDT_FAMILIES,
    ProblemSpec,
    evaluate,
    front_discretization,
    front_residual,
    make_problem,
    sample_offline_dataset,
    simplex_lattice,
)


def reference_objectives(family: str, m: int, x: list[float]) -> list[float]:
    """Closed forms written out scalar by scalar, independent of the vectorized code."""
    d = len(x)
    if family.startswith("zdt"):
        tail = x[1:]
        if family == "zdt4":
            tail = [-5.0 + 10.0 * t for t in tail]
            g = 1.0 + 10.0 * (d - 1) + sum(t * t - 10.0 * math.cos(4.0 * math.pi * t) for t in tail)
        elif family == "zdt6":
            g = 1.0 + 9.0 * (sum(tail) / (d - 1)) ** 0.25
        else:
            g = 1.0 + 9.0 * sum(tail) / (d - 1)
        if family == "zdt6":
            f1 = 1.0 - math.exp(-4.0 * x[0]) * math.sin(6.0 * math.pi * x[0]) ** 6
        else:
            f1 = x[0]
        if family in ("zdt1", "zdt4"):
            h = 1.0 - math.sqrt(f1 / g)
        elif family in ("zdt2", "zdt6"):
            h = 1.0 - (f1 / g) ** 2
        else:
            h = 1.0 - math.sqrt(f1 / g) - (f1 / g) * math.sin(10.0 * math.pi * f1)
        return [f1, g * h]

    xm = x[m - 1 :]
    k = len(xm)
    if family in ("dtlz1", "dtlz3"):
        g = 100.0 * (k + sum((v - 0.5) ** 2 - math.cos(20.0 * math.pi * (v - 0.5)) for v in xm))
    elif family == "dtlz6":
        g = sum(v**0.1 for v in xm)
    elif family == "dtlz7":
        g = 1.0 + 9.0 / k * sum(xm)
    else:
        g = sum((v - 0.5) ** 2 for v in xm)

    if family == "dtlz1":
        f = []
        for i in range(m):
            val = 0.5 * (1.0 + g)
            for j in range(m - 1 - i):
                val *= x[j]
            if i > 0:
                val *= 1.0 - x[m - 1 - i]
            f.append(val)
        return f
    if family == "dtlz7":
        h = m - sum(x[i] / (1.0 + g) * (1.0 + math.sin(3.0 * math.pi * x[i])) for i in range(m - 1))
        return list(x[: m - 1]) + [(1.0 + g) * h]
    if family == "dtlz4":
        theta = [0.5 * math.pi * x[i] ** 100 for i in range(m - 1)]
    elif family in ("dtlz5", "dtlz6"):
        theta = [0.5 * math.pi * x[0]] + [
            math.pi / (4.0 * (1.0 + g)) * (1.0 + 2.0 * g * x[i]) for i in range(1, m - 1)
        ]
    else:
        theta = [0.5 * math.pi * x[i] for i in range(m - 1)]
    f = []
    for i in range(m):
        val = 1.0 + g
        for j in range(m - 1 - i):
            val *= math.cos(theta[j])
        if i > 0:
            val *= math.sin(theta[m - 1 - i])
        f.append(val)
    return f


class TestProblemSpec:
    def test_defaults(self):
        assert make_problem("zdt1") == ProblemSpec("zdt1", 30, 2)
        assert make_problem("zdt4").d == 10 and make_problem("zdt6").d == 10
        assert make_problem("dtlz2") == ProblemSpec("dtlz2", 7, 3)
        assert make_problem("dtlz2", m=4).d == 8

    @pytest.mark.parametrize(
        "args",
        [("zdt7",), ("zdt1", 30, 3), ("dtlz1", 2, 3), ("zdt1", 1)],
    )
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            make_problem(*args)

    def test_bounds_are_unit_box(self):
        lo, hi = make_problem("zdt4").bounds
        assert np.all(lo == 0) and np.all(hi == 1)


class TestEvaluate:
    def test_zdt1_origin(self):
        assert evaluate(make_problem("zdt1"), np.zeros(30)).tolist() == [0.0, 1.0]

    def test_zdt1_endpoint(self):
        x = np.zeros(30)
        x[0] = 1.0
        assert evaluate(make_problem("zdt1"), x).tolist() == [1.0, 0.0]

    def test_dtlz2_axis_point(self):
        x = np.full(7, 0.5)
        x[:2] = 0.0
        np.testing.assert_allclose(evaluate(make_problem("dtlz2"), x), [1.0, 0.0, 0.0], atol=1e-15)

    def test_wrong_dimension(self):
        with pytest.raises(ValueError):
            evaluate(make_problem("zdt1"), np.zeros(29))

    @pytest.mark.parametrize("bad", [-1e-9, 1.0 + 1e-9, np.nan])
    def test_out_of_bounds(self, bad):
        x = np.full(30, 0.5)
        x[3] = bad
        with pytest.raises(ValueError):
            evaluate(make_problem("zdt1"), x)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_matches_scalar_reference(self, family, rng):
        spec = make_problem(family)
        X = rng.random((25, spec.d))
        got = evaluate(spec, X)
        for x, f in zip(X, got):
            np.testing.assert_allclose(f, reference_objectives(family, spec.m, x.tolist()), rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("family", ZDT_FAMILIES[:3] + ("zdt4",))
    def test_zdt_f1_is_x1(self, family, rng):
        spec = make_problem(family)
        X = rng.random((50, spec.d))
        assert np.array_equal(evaluate(spec, X)[:, 0], X[:, 0])

    def test_batch_equals_single_and_is_pure(self, rng):
        spec = make_problem("dtlz7")
        X = rng.random((10, spec.d))
        before = X.copy()
        batch = evaluate(spec, X)
        assert np.array_equal(X, before)
        for x, f in zip(X, batch):
            assert np.array_equal(evaluate(spec, x), f)


class TestFront:
    def test_zdt1_three_points(self):
        z = front_discretization(make_problem("zdt1"), 3)
        np.testing.assert_allclose(z.points, [[0, 1], [0.5, 1 - math.sqrt(0.5)], [1, 0]], atol=1e-15)

    def test_zdt2_two_points(self):
        z = front_discretization(make_problem("zdt2"), 2)
        np.testing.assert_allclose(z.points, [[0, 1], [1, 0]])

    def test_n_below_two(self):
        with pytest.raises(ValueError):
            front_discretization(make_problem("zdt1"), 1)

    def test_zdt6_starts_at_minimum_f1(self):
        z = front_discretization(make_problem("zdt6"), 50)
        assert z.points[0, 0] == pytest.approx(ZDT6_F1_MIN)
        t = np.linspace(0, 1, 200001)
        assert ZDT6_F1_MIN <= np.min(1 - np.exp(-4 * t) * np.sin(6 * np.pi * t) ** 6) + 1e-12

    @pytest.mark.parametrize("family", FAMILIES)
    def test_antichain_on_surface(self, family):
        spec = make_problem(family)
        z = front_discretization(spec, 300)
        assert len(z) >= 300 if spec.m > 2 else len(z) == 300
        assert not dominance_matrix(z.points).any()
        assert np.max(np.abs(front_residual(spec, z.points))) < 1e-9

    @pytest.mark.parametrize("family", FAMILIES)
    def test_no_random_design_dominates_front(self, family, rng):
        spec = make_problem(family)
        z = front_discretization(spec, 200).points
        f = evaluate(spec, rng.random((1000, spec.d)))
        dominated = np.any(np.all(f[:, None, :] <= z[None], axis=2) & np.any(f[:, None, :] < z[None], axis=2), axis=0)
        assert not dominated.any()

    @pytest.mark.parametrize("family", ["zdt1", "zdt2", "zdt3"])
    def test_front_points_are_attained(self, family):
        spec = make_problem(family)
        z = front_discretization(spec, 64).points
        x = np.zeros((len(z), spec.d))
        x[:, 0] = z[:, 0]
        np.testing.assert_allclose(evaluate(spec, x), z, atol=1e-12)

    def test_hausdorff_to_dense_front_decreases(self):
        spec = make_problem("zdt1")
        proxy = front_discretization(spec, 100_000)
        # nested grids: 2^j + 1 points on [0, 1]
        dists = [hausdorff_distance(front_discretization(spec, 2**j + 1), proxy) for j in range(2, 12)]
        assert all(a >= b for a, b in zip(dists, dists[1:]))
        assert dists[-1] < 0.1 * dists[0]

    def test_simplex_lattice_counts(self):
        lat = simplex_lattice(3, 4)
        assert len(lat) == math.comb(6, 2)
        np.testing.assert_allclose(lat.sum(axis=1), 1.0)
        assert len(np.unique(lat, axis=0)) == len(lat)


class TestSampling:
    def test_single_sample(self):
        spec = make_problem("zdt1")
        data = sample_offline_dataset(spec, 1, seed=7)
        assert len(data) == 1
        assert np.all((data.designs >= 0) & (data.designs <= 1))
        assert np.array_equal(evaluate(spec, data.designs), data.objectives)

    def test_deterministic(self):
        spec = make_problem("dtlz2")
        a = sample_offline_dataset(spec, 100, seed=3)
        b = sample_offline_dataset(spec, 100, seed=3)
        assert a.designs.tobytes() == b.designs.tobytes()
        assert a.objectives.tobytes() == b.objectives.tobytes()
        assert a.fingerprint == b.fingerprint
        assert sample_offline_dataset(spec, 100, seed=4).fingerprint != a.fingerprint

    def test_uniform_zdt1_is_off_front(self):
        spec = make_problem("zdt1")
        data = sample_offline_dataset(spec, 10_000, seed=0)
        assert offline_frontier_shift(data.objectives, front_discretization(spec, 10_000)) > 0

    def test_invalid_size(self):
        with pytest.raises(ValueError):
            sample_offline_dataset(make_problem("zdt1"), 0, seed=0)

    @given(st.sampled_from(DTLZ_FAMILIES + ZDT_FAMILIES), st.integers(0, 2**31))
    def test_finite_objectives(self, family, seed):
        data = sample_offline_dataset(make_problem(family), 20, seed)
        assert np.all(np.isfinite(data.objectives))

    def test_subset_keeps_provenance(self):
        data = sample_offline_dataset(make_problem("zdt2"), 30, seed=1)
        sub = data.subset(np.arange(5), shift_level=3)
        assert sub.shift_level == 3 and sub.pool_fingerprint == data.pool_fingerprint
        assert np.array_equal(nondominated_mask(sub.objectives), nondominated_mask(data.objectives[:5]))
