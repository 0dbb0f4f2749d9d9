"""ZDT and DTLZ benchmark problems and discretizations of their Pareto fronts.

Every problem is exposed on the unit box ``[0, 1]^d``; ZDT4's ``[-5, 5]``
tail variables are mapped affinely at evaluation time. Objectives are
minimized.

References:
    Zitzler, Deb & Thiele (2000), "Comparison of multiobjective evolutionary
    algorithms: empirical results".
    Deb, Thiele, Laumanns & Zitzler (2005), "Scalable test problems for
    evolutionary multiobjective optimization".
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .pareto import nondominated_mask

ZDT_FAMILIES = ("zdt1", "zdt2", "zdt3", "zdt4", "zdt6")
DTLZ_FAMILIES = tuple(f"dtlz{i}" for i in range(1, 8))
FAMILIES = ZDT_FAMILIES + DTLZ_FAMILIES

DTLZ4_ALPHA = 100.0


@dataclass(frozen=True)
class ProblemSpec:
    """A benchmark problem instance: family name plus (d, m)."""

    family: str
    d: int
    m: int

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown problem family {self.family!r}; expected one of {FAMILIES}")
        if self.family.startswith("zdt") and self.m != 2:
            raise ValueError(f"{self.family} has exactly 2 objectives, got m={self.m}")
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")
        if self.d < self.m:
            raise ValueError(f"d must be >= m, got d={self.d}, m={self.m}")
        if self.family.startswith("zdt") and self.d < 2:
            raise ValueError("ZDT problems need d >= 2")

    @property
    def name(self) -> str:
        return self.family

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(self.d), np.ones(self.d)

    def to_dict(self) -> dict:
        return {"family": self.family, "d": self.d, "m": self.m}


def make_problem(family: str, d: int | None = None, m: int | None = None) -> ProblemSpec:
    """Build a ProblemSpec with the usual literature dimensions filled in.

    ZDT problems default to d=30 (d=10 for ZDT4 and ZDT6); DTLZ problems
    default to m=3 and d=m+4.
    """
    family = family.lower()
    if family in ZDT_FAMILIES:
        m = 2 if m is None else m
        if d is None:
            d = 10 if family in ("zdt4", "zdt6") else 30
    elif family in DTLZ_FAMILIES:
        m = 3 if m is None else m
        d = m + 4 if d is None else d
    else:
        raise ValueError(f"unknown problem family {family!r}; expected one of {FAMILIES}")
    return ProblemSpec(family, int(d), int(m))


# --------------------------------------------------------------------------
# objective functions (vectorized over rows)


def _zdt(family: str, x: np.ndarray) -> np.ndarray:
    n = x.shape[1]
    x1 = x[:, 0]
    tail = x[:, 1:]
    if family == "zdt4":
        tail = -5.0 + 10.0 * tail
        g = 1.0 + 10.0 * (n - 1) + np.sum(tail**2 - 10.0 * np.cos(4.0 * np.pi * tail), axis=1)
    elif family == "zdt6":
        g = 1.0 + 9.0 * (np.sum(tail, axis=1) / (n - 1)) ** 0.25
    else:
        g = 1.0 + 9.0 * np.sum(tail, axis=1) / (n - 1)

    if family == "zdt6":
        f1 = 1.0 - np.exp(-4.0 * x1) * np.sin(6.0 * np.pi * x1) ** 6
    else:
        f1 = x1.copy()

    r = f1 / g
    if family in ("zdt1", "zdt4"):
        h = 1.0 - np.sqrt(r)
    elif family in ("zdt2", "zdt6"):
        h = 1.0 - r**2
    else:  # zdt3
        h = 1.0 - np.sqrt(r) - r * np.sin(10.0 * np.pi * f1)
    return np.column_stack([f1, g * h])


def _spherical(angles: np.ndarray, radius: np.ndarray, m: int) -> np.ndarray:
    """DTLZ2-style mapping of ``m-1`` angles (in radians) onto a sphere."""
    n = angles.shape[0]
    f = np.empty((n, m))
    cos = np.cos(angles)
    sin = np.sin(angles)
    for i in range(m):
        val = radius.copy()
        val *= np.prod(cos[:, : m - 1 - i], axis=1)
        if i > 0:
            val *= sin[:, m - 1 - i]
        f[:, i] = val
    return f


def _dtlz(family: str, m: int, x: np.ndarray) -> np.ndarray:
    pos = x[:, : m - 1]
    dist = x[:, m - 1 :]
    k = dist.shape[1]

    if family in ("dtlz1", "dtlz3"):
        g = 100.0 * (k + np.sum((dist - 0.5) ** 2 - np.cos(20.0 * np.pi * (dist - 0.5)), axis=1))
    elif family == "dtlz6":
        g = np.sum(dist**0.1, axis=1)
    elif family == "dtlz7":
        g = 1.0 + 9.0 / k * np.sum(dist, axis=1)
    else:
        g = np.sum((dist - 0.5) ** 2, axis=1)

    if family == "dtlz1":
        f = np.empty((x.shape[0], m))
        for i in range(m):
            val = 0.5 * (1.0 + g) * np.prod(pos[:, : m - 1 - i], axis=1)
            if i > 0:
                val = val * (1.0 - pos[:, m - 1 - i])
            f[:, i] = val
        return f
    if family in ("dtlz2", "dtlz3"):
        return _spherical(0.5 * np.pi * pos, 1.0 + g, m)
    if family == "dtlz4":
        return _spherical(0.5 * np.pi * pos**DTLZ4_ALPHA, 1.0 + g, m)
    if family in ("dtlz5", "dtlz6"):
        theta = np.empty_like(pos)
        theta[:, 0] = 0.5 * np.pi * pos[:, 0]
        if m > 2:
            theta[:, 1:] = (np.pi / (4.0 * (1.0 + g[:, None]))) * (1.0 + 2.0 * g[:, None] * pos[:, 1:])
        return _spherical(theta, 1.0 + g, m)
    # dtlz7
    f = np.empty((x.shape[0], m))
    f[:, : m - 1] = pos
    h = m - np.sum(pos / (1.0 + g[:, None]) * (1.0 + np.sin(3.0 * np.pi * pos)), axis=1)
    f[:, m - 1] = (1.0 + g) * h
    return f


def evaluate(spec: ProblemSpec, x) -> np.ndarray:
    """Evaluate the objective vector(s) of ``spec`` at design(s) ``x``.

    Args:
        spec: the problem.
        x: a ``(d,)`` design or an ``(n, d)`` batch inside ``[0, 1]^d``.

    Returns:
        ``(m,)`` or ``(n, m)`` objectives, matching the input rank.

    Raises:
        ValueError: wrong dimension, non-finite or out-of-bounds coordinates.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    batch = np.atleast_2d(arr)
    if batch.ndim != 2 or batch.shape[1] != spec.d:
        raise ValueError(f"{spec.family} expects designs of dimension {spec.d}, got shape {arr.shape}")
    if not np.all(np.isfinite(batch)):
        raise ValueError("design contains non-finite values")
    if np.any(batch < 0.0) or np.any(batch > 1.0):
        raise ValueError("design coordinate outside the [0, 1] bounds")
    if spec.family.startswith("zdt"):
        out = _zdt(spec.family, batch)
    else:
        out = _dtlz(spec.family, spec.m, batch)
    return out[0] if single else out


# --------------------------------------------------------------------------
# Pareto front discretizations


def simplex_lattice(m: int, divisions: int) -> np.ndarray:
    """All points of the ``m``-simplex with coordinates in ``{0, 1/H, ..., 1}``."""
    rows = []
    for bars in itertools.combinations(range(divisions + m - 1), m - 1):
        parts = np.diff(np.concatenate(([-1], bars, [divisions + m - 1]))) - 1
        rows.append(parts)
    return np.asarray(rows, dtype=float) / divisions


def _lattice_with_at_least(m: int, n: int) -> np.ndarray:
    h = 1
    while math.comb(h + m - 1, m - 1) < n:
        h += 1
    return simplex_lattice(m, h)


def _zdt6_f1_min() -> float:
    f1 = lambda t: 1.0 - np.exp(-4.0 * t) * np.sin(6.0 * np.pi * t) ** 6  # noqa: E731
    grid = np.linspace(0.0, 1.0, 100001)
    t0 = grid[np.argmin(f1(grid))]
    res = minimize_scalar(f1, bounds=(max(0.0, t0 - 1e-4), min(1.0, t0 + 1e-4)), method="bounded",
                          options={"xatol": 1e-14})
    return float(res.fun)


ZDT6_F1_MIN = _zdt6_f1_min()


def _evenly(points: np.ndarray, n: int) -> np.ndarray:
    idx = np.unique(np.round(np.linspace(0, len(points) - 1, n)).astype(int))
    return points[idx]


def _optimal_tail(spec: ProblemSpec) -> float:
    return 0.0 if spec.family in ("dtlz6", "dtlz7") else 0.5


@dataclass(frozen=True)
class FrontDiscretization:
    """Finite set of objective vectors lying on a problem's Pareto front."""

    points: np.ndarray
    problem: ProblemSpec | None = field(default=None)

    @property
    def resolution(self) -> int:
        return int(self.points.shape[0])

    @property
    def objectives(self) -> np.ndarray:
        return self.points

    def __len__(self) -> int:
        return self.resolution


def front_discretization(spec: ProblemSpec, n: int) -> FrontDiscretization:
    """Discretize the analytic Pareto front of ``spec``.

    Two-objective fronts get exactly ``n`` points: ZDT1/2/4/6 are sampled on
    a uniform f1 grid of the closed-form curve, ZDT3 keeps the non-dominated
    part of a dense f1 grid and thins it to ``n``. For ``m >= 3`` the
    smallest simplex lattice with at least ``n`` points is used (projected
    onto the sphere for DTLZ2-4, scaled to the plane ``sum f = 1/2`` for
    DTLZ1), DTLZ5/6 sample their degenerate curve with ``n`` points, and
    DTLZ7 filters a growing design grid. The returned points always form an
    anti-chain.

    Raises:
        ValueError: ``n < 2``.
    """
    if n < 2:
        raise ValueError(f"need at least 2 front points, got {n}")
    fam, m = spec.family, spec.m

    if fam in ("zdt1", "zdt4"):
        f1 = np.linspace(0.0, 1.0, n)
        pts = np.column_stack([f1, 1.0 - np.sqrt(f1)])
    elif fam == "zdt2":
        f1 = np.linspace(0.0, 1.0, n)
        pts = np.column_stack([f1, 1.0 - f1**2])
    elif fam == "zdt6":
        f1 = np.linspace(ZDT6_F1_MIN, 1.0, n)
        pts = np.column_stack([f1, 1.0 - f1**2])
    elif fam == "zdt3":
        f1 = np.linspace(0.0, 1.0, max(20 * n, 20000))
        curve = np.column_stack([f1, 1.0 - np.sqrt(f1) - f1 * np.sin(10.0 * np.pi * f1)])
        pts = _evenly(curve[nondominated_mask(curve)], n)
    elif fam == "dtlz1":
        pts = 0.5 * _lattice_with_at_least(m, n)
    elif fam in ("dtlz2", "dtlz3", "dtlz4"):
        w = _lattice_with_at_least(m, n)
        pts = w / np.linalg.norm(w, axis=1, keepdims=True)
    elif fam in ("dtlz5", "dtlz6"):
        x = np.full((n, spec.d), _optimal_tail(spec))
        x[:, : m - 1] = 0.0
        x[:, 0] = np.linspace(0.0, 1.0, n)
        pts = evaluate(spec, x)
        pts = pts[nondominated_mask(pts)]
    else:  # dtlz7
        side = 2
        while True:
            axes = [np.linspace(0.0, 1.0, side)] * (m - 1)
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m - 1)
            x = np.zeros((grid.shape[0], spec.d))
            x[:, : m - 1] = grid
            cand = evaluate(spec, x)
            pts = cand[nondominated_mask(cand)]
            if len(pts) >= n:
                break
            side = int(math.ceil(side * 1.25)) + 1
    return FrontDiscretization(points=np.ascontiguousarray(pts, dtype=float), problem=spec)


def front_residual(spec: ProblemSpec, points) -> np.ndarray:
    """Deviation of each point from the analytic front equation of ``spec``.

    Zero (to rounding) for points on the front's defining surface. For
    ZDT3 and DTLZ7 this is the defining trade-off surface, of which the
    Pareto front is the non-dominated subset.
    """
    f = np.atleast_2d(np.asarray(points, dtype=float))
    fam, m = spec.family, spec.m
    if fam in ("zdt1", "zdt4"):
        return f[:, 1] - (1.0 - np.sqrt(f[:, 0]))
    if fam in ("zdt2", "zdt6"):
        return f[:, 1] - (1.0 - f[:, 0] ** 2)
    if fam == "zdt3":
        return f[:, 1] - (1.0 - np.sqrt(f[:, 0]) - f[:, 0] * np.sin(10.0 * np.pi * f[:, 0]))
    if fam == "dtlz1":
        return np.sum(f, axis=1) - 0.5
    if fam in ("dtlz2", "dtlz3", "dtlz4", "dtlz5", "dtlz6"):
        return np.sum(f**2, axis=1) - 1.0
    pos = f[:, : m - 1]
    h = m - np.sum(pos / 2.0 * (1.0 + np.sin(3.0 * np.pi * pos)), axis=1)
    return f[:, m - 1] - 2.0 * h


# --------------------------------------------------------------------------
# offline datasets


def array_fingerprint(*arrays: np.ndarray) -> str:
    """Short sha256 digest of the raw bytes of ``arrays``."""
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a, dtype=float)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class OfflineDataset:
    """Designs and their true objective vectors, with provenance.

    Attributes:
        problem: source problem.
        designs: ``(n, d)`` designs in the unit box.
        objectives: ``(n, m)`` objectives, ``evaluate(problem, designs)``.
        shift_level: number of front-ordered removal rounds applied to the
            pool this dataset was drawn from (0 for a raw sample).
        seed: seed that produced the dataset.
        pool_fingerprint: digest of the pool the dataset was drawn from.
    """

    problem: ProblemSpec
    designs: np.ndarray
    objectives: np.ndarray
    shift_level: int = 0
    seed: int = 0
    pool_fingerprint: str = ""

    def __post_init__(self) -> None:
        if self.designs.shape[0] != self.objectives.shape[0]:
            raise ValueError("designs and objectives are not aligned")
        if self.designs.shape[1] != self.problem.d or self.objectives.shape[1] != self.problem.m:
            raise ValueError("dataset shape does not match its problem")

    def __len__(self) -> int:
        return self.designs.shape[0]

    @property
    def fingerprint(self) -> str:
        return array_fingerprint(self.designs, self.objectives)

    def subset(self, index, shift_level: int | None = None, seed: int | None = None) -> OfflineDataset:
        return OfflineDataset(
            problem=self.problem,
            designs=self.designs[index],
            objectives=self.objectives[index],
            shift_level=self.shift_level if shift_level is None else shift_level,
            seed=self.seed if seed is None else seed,
            pool_fingerprint=self.pool_fingerprint,
        )


def sample_offline_dataset(spec: ProblemSpec, n: int, seed: int) -> OfflineDataset:
    """Draw ``n`` designs uniformly from the unit box and evaluate them."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    designs = rng.random((n, spec.d))
    objectives = evaluate(spec, designs)
    fp = array_fingerprint(designs, objectives)
    return OfflineDataset(spec, designs, objectives, shift_level=0, seed=int(seed), pool_fingerprint=fp)


__all__ = [
    "DTLZ_FAMILIES",
    "FAMILIES",
    "FrontDiscretization",
    "OfflineDataset",
    "ProblemSpec",
    "ZDT_FAMILIES",
    "array_fingerprint",
    "evaluate",
    "front_discretization",
    "front_residual",
    "make_problem",
    "sample_offline_dataset",
    "simplex_lattice",
]
