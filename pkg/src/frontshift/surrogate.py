"""Kernel ridge regression surrogates, one regressor per objective.

All regressors share the training designs and the RBF bandwidth. With a
fixed ridge one Cholesky factorization of ``K + ridge * I`` serves every
objective; with ``ridge="loo"`` (the default) an eigendecomposition of ``K``
gives the exact leave-one-out error of every candidate ridge, and each
objective keeps the best one. Targets are centred on their training mean,
so predictions far from the data revert to that mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.spatial.distance import cdist, pdist

from .problems import OfflineDataset

MODEL_FORMAT = "frontshift-krr"
MODEL_VERSION = 1
MAX_TRAIN = 2_000
# candidate ridges for leave-one-out selection, as multiples of 1e-6 * n
LOO_GRID = tuple(10.0**k for k in range(7))


class SurrogateFitError(RuntimeError):
    """The regularized kernel system could not be factorized."""


@dataclass
class SurrogateModel:
    """Fitted multi-output kernel ridge model.

    Attributes:
        train_designs: ``(n, d)`` training inputs.
        weights: ``(n, m)`` dual coefficients, one column per objective.
        offset: ``(m,)`` training means added back to predictions.
        bandwidth: RBF length scale sigma.
        ridge: ``(m,)`` regularization added to the kernel diagonal, per objective.
        fingerprint: provenance (dataset digest, subsample seed, sizes).
    """

    train_designs: np.ndarray
    weights: np.ndarray
    offset: np.ndarray
    bandwidth: float
    ridge: np.ndarray
    fingerprint: dict = field(default_factory=dict)

    @property
    def n_obj(self) -> int:
        return self.weights.shape[1]

    @property
    def n_var(self) -> int:
        return self.train_designs.shape[1]

    def predict(self, x) -> np.ndarray:
        """Predicted objectives for a ``(d,)`` design or ``(n, d)`` batch."""
        arr = np.asarray(x, dtype=float)
        single = arr.ndim == 1
        batch = np.atleast_2d(arr)
        if batch.shape[1] != self.n_var:
            raise ValueError(f"model expects dimension {self.n_var}, got {batch.shape[1]}")
        k = np.exp(cdist(batch, self.train_designs, "sqeuclidean") * (-0.5 / self.bandwidth**2))
        out = k @ self.weights + self.offset
        return out[0] if single else out

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "bandwidth": self.bandwidth,
            "ridge": self.ridge.tolist(),
            "offset": self.offset.tolist(),
            "train_designs": self.train_designs.tolist(),
            "weights": self.weights.tolist(),
            "fingerprint": self.fingerprint,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SurrogateModel:
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model artifact {d.get('format')!r} v{d.get('version')}")
        return cls(
            train_designs=np.asarray(d["train_designs"], dtype=float),
            weights=np.asarray(d["weights"], dtype=float),
            offset=np.asarray(d["offset"], dtype=float),
            bandwidth=float(d["bandwidth"]),
            ridge=np.asarray(d["ridge"], dtype=float),
            fingerprint=dict(d.get("fingerprint", {})),
        )


def predict(model: SurrogateModel, x) -> np.ndarray:
    return model.predict(x)


def median_heuristic(designs: np.ndarray) -> float:
    """Median pairwise Euclidean distance between designs (1.0 if all coincide)."""
    if len(designs) < 2:
        return 1.0
    med = float(np.median(pdist(designs)))
    return med if med > 0 else 1.0


def _loo_weights(K: np.ndarray, Y: np.ndarray, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column ridge from ``grid`` minimizing exact leave-one-out MSE."""
    evals, evecs = np.linalg.eigh(K)
    evals = np.clip(evals, 0.0, None)
    proj = evecs.T @ Y
    sq = evecs**2
    weights = np.empty_like(Y)
    chosen = np.empty(Y.shape[1])
    best = np.full(Y.shape[1], np.inf)
    for lam in grid:
        inv = 1.0 / (evals + lam)
        alpha = evecs @ (inv[:, None] * proj)
        h_diag = sq @ inv
        loo = np.mean((alpha / h_diag[:, None]) ** 2, axis=0)
        better = loo < best
        best[better] = loo[better]
        chosen[better] = lam
        weights[:, better] = alpha[:, better]
    return weights, chosen


def fit(
    data: OfflineDataset,
    ridge: float | str = "loo",
    bandwidth: str | float = "median",
    *,
    max_train: int = MAX_TRAIN,
    seed: int = 0,
) -> SurrogateModel:
    """Fit one kernel ridge regressor per objective on ``data``.

    Args:
        data: offline designs and objectives (at least 2 rows).
        ridge: positive diagonal regularization shared by all objectives, or
            ``"loo"`` to pick it per objective from ``1e-6 * n * LOO_GRID``
            by exact leave-one-out error.
        bandwidth: ``"median"`` or a fixed RBF length scale.
        max_train: larger datasets are subsampled uniformly to this size.
        seed: seed of that subsample.

    Raises:
        ValueError: fewer than 2 rows, or a non-positive ridge/bandwidth.
        SurrogateFitError: the kernel system is numerically singular.
    """
    X = np.asarray(data.designs, dtype=float)
    Y = np.asarray(data.objectives, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 training points")
    if n > max_train:
        idx = np.sort(np.random.default_rng(seed).choice(n, size=max_train, replace=False))
        X, Y = X[idx], Y[idx]
    n_train = X.shape[0]
    if isinstance(ridge, str):
        if ridge != "loo":
            raise ValueError(f"unknown ridge rule {ridge!r}")
    elif not ridge > 0:
        raise ValueError(f"ridge must be positive, got {ridge}")
    if bandwidth == "median":
        sigma = median_heuristic(X)
    else:
        sigma = float(bandwidth)
        if not sigma > 0:
            raise ValueError(f"bandwidth must be positive, got {bandwidth}")

    offset = Y.mean(axis=0)
    K = np.exp(cdist(X, X, "sqeuclidean") * (-0.5 / sigma**2))
    if ridge == "loo":
        grid = 1e-6 * n_train * np.asarray(LOO_GRID)
        try:
            weights, ridges = _loo_weights(K, Y - offset, grid)
        except LinAlgError as exc:
            raise SurrogateFitError("eigendecomposition of the kernel matrix failed") from exc
    else:
        K[np.diag_indices_from(K)] += ridge
        try:
            factor = cho_factor(K, lower=True, check_finite=True)
        except LinAlgError as exc:
            raise SurrogateFitError(f"kernel system singular at ridge={ridge:g}") from exc
        weights = cho_solve(factor, Y - offset)
        ridges = np.full(Y.shape[1], float(ridge))
    if not np.all(np.isfinite(weights)):
        raise SurrogateFitError("non-finite dual weights")

    fingerprint = {
        "dataset": data.fingerprint,
        "n_data": int(n),
        "n_train": int(n_train),
        "max_train": int(max_train),
        "subsample_seed": int(seed),
        "ridge_rule": ridge if isinstance(ridge, str) else "fixed",
        "bandwidth_rule": bandwidth if isinstance(bandwidth, str) else "fixed",
    }
    return SurrogateModel(X, weights, offset, float(sigma), ridges, fingerprint)


__all__ = ["MAX_TRAIN", "SurrogateFitError", "SurrogateModel", "fit", "median_heuristic", "predict"]
