import json

import numpy as np
import pytest

from frontshift.problems import FAMILIES, OfflineDataset, make_problem, sample_offline_dataset
from frontshift.surrogate import (
    LOO_GRID,
    SurrogateFitError,
    SurrogateModel,
    fit,
    median_heuristic,
    predict,
)

ZDT1 = make_problem("zdt1")


@pytest.fixture(scope="module")
def zdt1_model():
    data = sample_offline_dataset(ZDT1, 1000, seed=0)
    return data, fit(data)


def loo_mse_bruteforce(X, y, sigma, lam):
    """Leave-one-out error by refitting n times."""
    from scipy.spatial.distance import cdist

    errs = []
    for i in range(len(X)):
        keep = np.arange(len(X)) != i
        yk = y[keep] - y[keep].mean()
        K = np.exp(-cdist(X[keep], X[keep], "sqeuclidean") / (2 * sigma**2))
        alpha = np.linalg.solve(K + lam * np.eye(len(yk)), yk)
        k = np.exp(-cdist(X[i : i + 1], X[keep], "sqeuclidean") / (2 * sigma**2))
        errs.append((k @ alpha + y[keep].mean() - y[i]).item() ** 2)
    return float(np.mean(errs))


class TestFit:
    def test_training_error(self, zdt1_model):
        data, model = zdt1_model
        mse = np.mean((model.predict(data.designs) - data.objectives) ** 2)
        assert mse <= 1e-2

    def test_constant_objectives(self, rng):
        designs = rng.random((40, ZDT1.d))
        data = OfflineDataset(ZDT1, designs, np.tile([0.25, 3.0], (40, 1)))
        model = fit(data)
        pred = model.predict(rng.random((20, ZDT1.d)))
        np.testing.assert_allclose(pred, np.tile([0.25, 3.0], (20, 1)), atol=1e-9)

    def test_duplicate_designs(self):
        base = sample_offline_dataset(ZDT1, 30, seed=2)
        data = base.subset(np.r_[np.arange(30), np.arange(30)])
        model = fit(data, ridge=1e-6 * 60)
        loo = fit(data)
        for m in (model, loo):
            pred = m.predict(data.designs)
            np.testing.assert_array_equal(pred[:30], pred[30:])

    def test_interpolation_with_tiny_ridge(self):
        data = sample_offline_dataset(ZDT1, 100, seed=3)
        model = fit(data, ridge=1e-9)
        np.testing.assert_allclose(model.predict(data.designs), data.objectives, atol=1e-3)

    def test_loo_selection_matches_refits(self):
        data = sample_offline_dataset(make_problem("zdt2", d=4), 40, seed=5)
        model = fit(data)
        sigma = model.bandwidth
        grid = 1e-6 * 40 * np.asarray(LOO_GRID)
        for j in range(2):
            errors = [loo_mse_bruteforce(data.designs, data.objectives[:, j], sigma, lam) for lam in grid]
            assert model.ridge[j] == pytest.approx(grid[int(np.argmin(errors))])

    def test_subsample_cap(self):
        data = sample_offline_dataset(ZDT1, 300, seed=1)
        model = fit(data, max_train=120, seed=4)
        assert model.train_designs.shape == (120, ZDT1.d)
        assert model.fingerprint["n_train"] == 120 and model.fingerprint["subsample_seed"] == 4
        assert model.fingerprint["dataset"] == data.fingerprint

    def test_deterministic(self):
        data = sample_offline_dataset(ZDT1, 300, seed=1)
        a = fit(data, max_train=200, seed=7)
        b = fit(data, max_train=200, seed=7)
        assert a.weights.tobytes() == b.weights.tobytes()
        x = np.random.default_rng(0).random((5, ZDT1.d))
        assert a.predict(x).tobytes() == b.predict(x).tobytes()

    @pytest.mark.parametrize("kwargs", [{"ridge": 0.0}, {"ridge": -1.0}, {"ridge": "gcv"}, {"bandwidth": 0.0}])
    def test_invalid_settings(self, kwargs):
        with pytest.raises(ValueError):
            fit(sample_offline_dataset(ZDT1, 10, seed=0), **kwargs)

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            fit(sample_offline_dataset(ZDT1, 1, seed=0))

    def test_singular_system(self):
        base = sample_offline_dataset(ZDT1, 5, seed=0)
        data = base.subset(np.zeros(10, dtype=int))
        with pytest.raises(SurrogateFitError):
            fit(data, ridge=1e-300)

    def test_median_heuristic(self):
        assert median_heuristic(np.array([[0.0, 0.0], [3.0, 4.0]])) == pytest.approx(5.0)
        assert median_heuristic(np.ones((3, 2))) == 1.0


class TestPredict:
    def test_dimension_mismatch(self, zdt1_model):
        _, model = zdt1_model
        with pytest.raises(ValueError):
            model.predict(np.zeros(5))

    def test_batch_equals_pointwise(self, zdt1_model, rng):
        _, model = zdt1_model
        x = rng.random((7, ZDT1.d))
        batch = predict(model, x)
        for xi, fi in zip(x, batch):
            np.testing.assert_allclose(predict(model, xi), fi, rtol=0, atol=1e-12)

    def test_continuity(self, zdt1_model, rng):
        _, model = zdt1_model
        x = rng.random(ZDT1.d) * 0.9
        assert np.max(np.abs(model.predict(x) - model.predict(x + 1e-6))) < 1e-4

    def test_serialization_round_trip(self, zdt1_model, rng):
        _, model = zdt1_model
        restored = SurrogateModel.from_dict(json.loads(json.dumps(model.to_dict())))
        x = rng.random((5, ZDT1.d))
        assert np.array_equal(restored.predict(x), model.predict(x))

    def test_rejects_unknown_version(self, zdt1_model):
        _, model = zdt1_model
        d = model.to_dict()
        d["version"] = 99
        with pytest.raises(ValueError):
            SurrogateModel.from_dict(d)


@pytest.mark.parametrize("family", FAMILIES)
def test_held_out_r2_positive(family):
    spec = make_problem(family)
    train = sample_offline_dataset(spec, 10_000, seed=0)
    test = sample_offline_dataset(spec, 2_000, seed=1)
    model = fit(train)
    pred = model.predict(test.designs)
    resid = np.sum((pred - test.objectives) ** 2, axis=0)
    total = np.sum((test.objectives - test.objectives.mean(axis=0)) ** 2, axis=0)
    assert np.all(1.0 - resid / total > 0)
