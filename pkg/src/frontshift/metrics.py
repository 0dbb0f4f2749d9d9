"""Quality indicators for solution sets.

Hypervolume, GD/IGD and their ``+`` variants (Ishibuchi et al., 2015), a
one-sided kernel MMD, the offline-frontier shift and the Hausdorff
distance. Minimization convention throughout. Point sets may be given as
:class:`~frontshift.pareto.SolutionSet`, :class:`FrontDiscretization` or
plain ``(n, m)`` arrays.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist, pdist

from .pareto import as_objectives, nondominated_mask

logger = logging.getLogger(__name__)

METRIC_KEYS = ("hv", "gd", "igd", "gd_plus", "igd_plus", "mmd_plus", "shift")

# pairwise blocks are processed in slabs of at most this many entries
_BLOCK = 1 << 22


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = as_objectives(a)
    b = as_objectives(b)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("point sets must be non-empty")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: m={a.shape[1]} vs m={b.shape[1]}")
    return a, b


# --------------------------------------------------------------------------
# hypervolume


def _hv2d(f: np.ndarray, ref: np.ndarray) -> float:
    f = f[nondominated_mask(f)]
    f = f[np.lexsort((f[:, 1], f[:, 0]))]
    # drop duplicates; on a sorted anti-chain f2 strictly decreases
    keep = np.concatenate(([True], np.any(f[1:] != f[:-1], axis=1)))
    f = f[keep]
    right = np.append(f[1:, 0], ref[0])
    return float(np.sum((right - f[:, 0]) * (ref[1] - f[:, 1])))


def _hv3d(f: np.ndarray, ref: np.ndarray) -> float:
    f = f[nondominated_mask(f)]
    f = f[np.argsort(f[:, 2], kind="stable")]
    tops = np.append(f[1:, 2], ref[2])
    volume = 0.0
    for i in range(len(f)):
        depth = tops[i] - f[i, 2]
        if depth > 0:
            volume += depth * _hv2d(f[: i + 1, :2], ref[:2])
    return volume


def hypervolume_mc(points, ref, n_samples: int = 1_000_000, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo hypervolume estimate and its standard error.

    Samples uniformly in the box spanned by the componentwise minimum of the
    points and ``ref`` and counts the dominated fraction.
    """
    f = as_objectives(points)
    ref = np.asarray(ref, dtype=float)
    f = f[np.all(f < ref, axis=1)]
    if len(f) == 0:
        return 0.0, 0.0
    lo = f.min(axis=0)
    box = float(np.prod(ref - lo))
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = max(1, _BLOCK // max(1, f.shape[0] * f.shape[1]))
    remaining = n_samples
    while remaining > 0:
        k = min(chunk, remaining)
        u = lo + rng.random((k, f.shape[1])) * (ref - lo)
        dominated = np.zeros(k, dtype=bool)
        for start in range(0, len(f), 256):
            block = f[start : start + 256]
            dominated |= np.any(np.all(block[None, :, :] <= u[:, None, :], axis=2), axis=1)
        hits += int(dominated.sum())
        remaining -= k
    p = hits / n_samples
    return box * p, box * math.sqrt(p * (1.0 - p) / n_samples)


def hypervolume(points, ref, *, n_samples: int = 1_000_000, seed: int = 0) -> float:
    """Lebesgue measure of the region dominated by ``points`` and bounded by ``ref``.

    Exact for two objectives (sweep over points sorted by f1) and three
    objectives (sweep over f3 slabs, each an exact 2-D hypervolume). For
    ``m > 3`` a Monte-Carlo estimate is returned and its standard error is
    logged; use :func:`hypervolume_mc` to obtain both. Points not strictly
    better than ``ref`` in every objective contribute nothing.

    Raises:
        ValueError: non-finite reference point or dimension mismatch.
    """
    f = as_objectives(points)
    ref = np.asarray(ref, dtype=float)
    if ref.ndim != 1 or ref.shape[0] != f.shape[1]:
        raise ValueError(f"reference point of shape {ref.shape} for m={f.shape[1]}")
    if not np.all(np.isfinite(ref)):
        raise ValueError("reference point must be finite")
    f = f[np.all(f < ref, axis=1)]
    if len(f) == 0:
        return 0.0
    m = f.shape[1]
    if m == 2:
        return _hv2d(f, ref)
    if m == 3:
        return _hv3d(f, ref)
    value, stderr = hypervolume_mc(f, ref, n_samples=n_samples, seed=seed)
    logger.info("Monte-Carlo hypervolume (m=%d): %.6g +/- %.2g", m, value, stderr)
    return value


@dataclass(frozen=True)
class ObjectiveScaler:
    """Per-objective affine map ``(f - lower) / (upper - lower)``.

    ``ObjectiveScaler.identity(m)`` leaves values untouched; :meth:`fit`
    takes the min/max of a sample (the undegraded pool in the shift suites),
    so indicators of every level share one scale.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.lower) != len(self.upper):
            raise ValueError("lower and upper bounds differ in length")
        if any(not (u > lo) for lo, u in zip(self.lower, self.upper)):
            raise ValueError("each upper bound must exceed its lower bound")

    @classmethod
    def identity(cls, m: int) -> ObjectiveScaler:
        return cls((0.0,) * m, (1.0,) * m)

    @classmethod
    def fit(cls, objectives) -> ObjectiveScaler:
        f = as_objectives(objectives)
        lo, hi = f.min(axis=0), f.max(axis=0)
        hi = np.where(hi > lo, hi, lo + 1.0)
        return cls(tuple(float(v) for v in lo), tuple(float(v) for v in hi))

    @classmethod
    def from_dict(cls, d: dict) -> ObjectiveScaler:
        return cls(tuple(d["lower"]), tuple(d["upper"]))

    def __call__(self, points) -> np.ndarray:
        f = as_objectives(points)
        lo = np.asarray(self.lower)
        return (f - lo) / (np.asarray(self.upper) - lo)

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper)}


def default_reference_point(objectives, margin: float = 0.1) -> np.ndarray:
    """Nadir of ``objectives`` pushed out by ``margin`` times the range."""
    f = as_objectives(objectives)
    lo, hi = f.min(axis=0), f.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return hi + margin * span


# --------------------------------------------------------------------------
# distance indicators


def _nearest_sq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance from each row of ``a`` to its nearest row in ``b``."""
    dist, _ = cKDTree(b).query(a, k=1)
    return dist**2


def _nearest_sq_plus(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per row of ``a``: min over ``b`` of ``||max(a - b, 0)||^2``."""
    out = np.empty(a.shape[0])
    rows = max(1, _BLOCK // (b.shape[0] * b.shape[1]))
    for start in range(0, a.shape[0], rows):
        h = a[start : start + rows, None, :] - b[None, :, :]
        np.maximum(h, 0.0, out=h)
        out[start : start + rows] = np.min(np.einsum("ijk,ijk->ij", h, h), axis=1)
    return out


def gd(A, Z) -> float:
    """Generational distance: RMS distance from each point of ``A`` to ``Z``."""
    a, z = _pair(A, Z)
    return math.sqrt(float(np.mean(_nearest_sq(a, z))))


def igd(A, Z) -> float:
    """Inverted generational distance, ``gd(Z, A)``."""
    return gd(Z, A)


def gd_plus(A, Z) -> float:
    """GD+ : like :func:`gd` but each pair distance counts only ``max(a - z, 0)``.

    A point of ``A`` that weakly dominates some front point scores zero.
    """
    a, z = _pair(A, Z)
    return math.sqrt(float(np.mean(_nearest_sq_plus(a, z))))


def igd_plus(A, Z) -> float:
    """IGD+ : RMS over front points ``z`` of ``min_a ||max(a - z, 0)||``."""
    a, z = _pair(A, Z)
    # h = a - z, i.e. the negated "z - a" deviation seen from the front point
    return math.sqrt(float(np.mean(_nearest_sq_plus(-z, -a))))


def offline_frontier_shift(P, Z) -> float:
    """Mean squared distance from the points of ``P`` to the front ``Z``.

    Nearest-point projection onto a dense discretization stands in for the
    orthogonal projection onto the front manifold, so this equals
    ``gd(P, Z) ** 2``.
    """
    p, z = _pair(P, Z)
    return float(np.mean(_nearest_sq(p, z)))


def hausdorff_distance(A, B) -> float:
    """Symmetric Hausdorff distance between two finite point sets."""
    a, b = _pair(A, B)
    d_ab, _ = cKDTree(b).query(a, k=1)
    d_ba, _ = cKDTree(a).query(b, k=1)
    return float(max(d_ab.max(), d_ba.max()))


# --------------------------------------------------------------------------
# kernel two-sample distance


@dataclass(frozen=True)
class KernelConfig:
    """RBF kernel settings for :func:`mmd_plus`.

    Attributes:
        kind: only ``"rbf"``.
        bandwidth: ``"median"`` for the median heuristic on the pooled
            Euclidean distances, or a fixed positive sigma.
        one_sided: count only one-sided deviations inside cross terms.
        direction: for one-sided cross terms between a candidate ``p`` (first
            set) and a reference ``q`` (second set): ``"improvement"`` uses
            ``max(q - p, 0)``, how far ``p`` improves on ``q``;
            ``"excess"`` uses ``max(p - q, 0)``, the GD+ orientation.
    """

    kind: str = "rbf"
    bandwidth: str | float = "median"
    one_sided: bool = True
    direction: str = "improvement"

    def __post_init__(self) -> None:
        if self.kind != "rbf":
            raise ValueError(f"unsupported kernel {self.kind!r}")
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "median":
                raise ValueError(f"unknown bandwidth rule {self.bandwidth!r}")
        elif not (float(self.bandwidth) > 0 and math.isfinite(float(self.bandwidth))):
            raise ValueError("fixed bandwidth must be positive and finite")
        if self.direction not in ("improvement", "excess"):
            raise ValueError(f"unknown direction {self.direction!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def median_bandwidth(P, Q) -> float:
    """Median pairwise Euclidean distance of the pooled sample (1.0 if degenerate)."""
    p, q = _pair(P, Q)
    pooled = np.vstack([p, q])
    if len(pooled) < 2:
        return 1.0
    med = float(np.median(pdist(pooled)))
    return med if med > 0 else 1.0


def _one_sided_sq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``||max(a_i - b_j, 0)||^2`` for all pairs."""
    out = np.empty((a.shape[0], b.shape[0]))
    rows = max(1, _BLOCK // (b.shape[0] * b.shape[1]))
    for start in range(0, a.shape[0], rows):
        h = a[start : start + rows, None, :] - b[None, :, :]
        np.maximum(h, 0.0, out=h)
        out[start : start + rows] = np.einsum("ijk,ijk->ij", h, h)
    return out


def mmd_squared(P, Q, cfg: KernelConfig = KernelConfig()) -> tuple[float, float]:
    """Biased (V-statistic) MMD^2 estimate and the bandwidth used.

    With ``cfg.one_sided`` every kernel term uses the one-sided distance.
    Within-sample terms average over ordered pairs and so do not depend on
    the orientation; the cross term is oriented by ``cfg.direction``. The
    value is not clamped.
    """
    p, q = _pair(P, Q)
    sigma = median_bandwidth(p, q) if cfg.bandwidth == "median" else float(cfg.bandwidth)
    if cfg.one_sided:
        d_pp = _one_sided_sq(p, p)
        d_qq = _one_sided_sq(q, q)
        d_pq = _one_sided_sq(q, p) if cfg.direction == "improvement" else _one_sided_sq(p, q)
    else:
        d_pp = cdist(p, p, "sqeuclidean")
        d_qq = cdist(q, q, "sqeuclidean")
        d_pq = cdist(p, q, "sqeuclidean")
    var = sigma * sigma
    if not (var > 0 and math.isfinite(var)):
        raise FloatingPointError(f"bandwidth {sigma!r} gives non-finite kernel values")
    scale = -0.5 / var
    k_pp = np.exp(scale * d_pp).mean()
    k_qq = np.exp(scale * d_qq).mean()
    k_pq = np.exp(scale * d_pq).mean()
    value = float(k_pp + k_qq - 2.0 * k_pq)
    if not math.isfinite(value):
        raise FloatingPointError("non-finite kernel values")
    return value, sigma


def mmd_plus(P, Q, cfg: KernelConfig = KernelConfig()) -> float:
    """Kernel MMD between ``P`` (candidates) and ``Q`` (reference), clamped at 0."""
    value, _ = mmd_squared(P, Q, cfg)
    return math.sqrt(max(value, 0.0))


# --------------------------------------------------------------------------
# report


def fingerprint(config: dict) -> str:
    """Stable short digest of a JSON-serializable configuration."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class MetricReport:
    """All indicator values for one evaluated set."""

    hv: float
    gd: float
    igd: float
    gd_plus: float
    igd_plus: float
    mmd_plus: float
    shift: float
    reference_point: list[float]
    front_resolution: int
    mmd_bandwidth: float
    config_fingerprint: str
    extra: dict = field(default_factory=dict)

    def values(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in METRIC_KEYS}

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_set(
    A,
    Z,
    *,
    offline=None,
    reference_point=None,
    kernel: KernelConfig = KernelConfig(),
) -> MetricReport:
    """Compute every indicator for ``A`` against the front discretization ``Z``.

    ``offline`` is the reference sample for MMD+ (defaults to ``A`` itself,
    giving 0); ``reference_point`` defaults to the nadir of ``A`` (and of
    ``offline`` when given) plus 10% of the range.
    """
    a, z = _pair(A, Z)
    off = a if offline is None else as_objectives(offline)
    if reference_point is None:
        reference_point = default_reference_point(np.vstack([a, off]))
    ref = np.asarray(reference_point, dtype=float)
    mmd2, sigma = mmd_squared(a, off, kernel)
    near = _nearest_sq(a, z)
    config = {"kernel": kernel.to_dict(), "reference_point": ref.tolist(), "front_resolution": len(z)}
    return MetricReport(
        hv=hypervolume(a, ref),
        gd=math.sqrt(float(np.mean(near))),
        igd=igd(a, z),
        gd_plus=gd_plus(a, z),
        igd_plus=igd_plus(a, z),
        mmd_plus=math.sqrt(max(mmd2, 0.0)),
        shift=float(np.mean(near)),
        reference_point=ref.tolist(),
        front_resolution=int(len(z)),
        mmd_bandwidth=float(sigma),
        config_fingerprint=fingerprint(config),
    )


__all__ = [
    "METRIC_KEYS",
    "KernelConfig",
    "MetricReport",
    "ObjectiveScaler",
    "default_reference_point",
    "evaluate_set",
    "fingerprint",
    "gd",
    "gd_plus",
    "hausdorff_distance",
    "hypervolume",
    "hypervolume_mc",
    "igd",
    "igd_plus",
    "median_bandwidth",
    "mmd_plus",
    "mmd_squared",
    "offline_frontier_shift",
]
