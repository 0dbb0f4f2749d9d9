"""Offline datasets at controlled distances from the Pareto front.

A large uniform pool is sorted into non-dominated fronts once. Level ``k``
discards the first ``k * removal_per_level`` points of the pool in front
order (best fronts first; a front cut part-way is thinned uniformly at
random) and then draws ``resample_size`` points without replacement from
what is left. Higher levels therefore sit further from the front.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .pareto import fast_nondominated_sort
from .problems import OfflineDataset, ProblemSpec, sample_offline_dataset


class PoolExhaustedError(ValueError):
    """The pool is too small for the requested shift level."""

    def __init__(self, level: int, needed: int, available: int):
        super().__init__(
            f"pool exhausted at shift level {level}: need {needed} points, {available} available"
        )
        self.level = level


@dataclass(frozen=True)
class ShiftSchedule:
    """Shape of a shift suite.

    ``levels`` datasets are produced (k = 0 .. levels-1), each with
    ``resample_size`` points, after removing ``k * removal_per_level``.
    """

    levels: int = 6
    removal_per_level: int = 10_000
    resample_size: int = 10_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.removal_per_level < 0 or self.resample_size < 1:
            raise ValueError("removal_per_level must be >= 0 and resample_size >= 1")

    def min_pool_size(self) -> int:
        return max(
            (self.levels - 1) * self.removal_per_level + self.resample_size,
            self.levels * self.removal_per_level + 1,
        )

    def to_dict(self) -> dict:
        return asdict(self)


DESK_SCHEDULE = ShiftSchedule(levels=6, removal_per_level=1_000, resample_size=1_000)
DESK_POOL_SIZE = 7_000
PAPER_SCHEDULE = ShiftSchedule(levels=6, removal_per_level=10_000, resample_size=10_000)
PAPER_POOL_SIZE = 70_000


def _streams(seed: int, levels: int) -> tuple[np.random.Generator, list[np.random.Generator]]:
    """One generator for the removal tie-break plus one per level for resampling."""
    children = np.random.SeedSequence([int(seed), 0x5EED]).spawn(levels + 1)
    gens = [np.random.default_rng(c) for c in children]
    return gens[0], gens[1:]


def removal_order(pool: OfflineDataset, seed: int) -> np.ndarray:
    """Pool indices in removal order: front 0 first, shuffled within each front."""
    ranking = fast_nondominated_sort(pool.objectives)
    rng, _ = _streams(seed, 0)
    return np.concatenate([rng.permutation(front) for front in ranking.fronts])


def degrade(pool: OfflineDataset, schedule: ShiftSchedule, k: int, *, order: np.ndarray | None = None) -> OfflineDataset:
    """Dataset at shift level ``k`` drawn from ``pool``.

    Args:
        pool: the initial sample.
        schedule: removal and resample counts plus the seed.
        k: shift level, ``0 <= k < schedule.levels``.
        order: precomputed :func:`removal_order` (recomputed when omitted).

    Raises:
        PoolExhaustedError: fewer than ``resample_size`` points remain.
    """
    if not 0 <= k < schedule.levels:
        raise ValueError(f"level {k} outside 0..{schedule.levels - 1}")
    n = len(pool)
    removed = k * schedule.removal_per_level
    available = n - removed
    if available < schedule.resample_size:
        raise PoolExhaustedError(k, removed + schedule.resample_size, n)
    if order is None:
        order = removal_order(pool, schedule.seed)
    remaining = np.sort(order[removed:])
    _, level_rngs = _streams(schedule.seed, schedule.levels)
    pick = level_rngs[k].choice(remaining, size=schedule.resample_size, replace=False)
    return pool.subset(np.sort(pick), shift_level=k, seed=schedule.seed)


def build_pool(spec: ProblemSpec, pool_size: int, seed: int) -> OfflineDataset:
    """Uniform initial pool; its seed is derived from the schedule seed."""
    pool_seed = int(np.random.SeedSequence([int(seed), 0x9001]).generate_state(1)[0])
    return sample_offline_dataset(spec, pool_size, pool_seed)


def build_shift_suite(spec: ProblemSpec, pool_size: int, schedule: ShiftSchedule) -> list[OfflineDataset]:
    """Datasets for every level ``0 .. schedule.levels - 1`` from one seeded pool."""
    if pool_size < schedule.min_pool_size():
        raise PoolExhaustedError(
            schedule.levels - 1,
            schedule.min_pool_size(),
            pool_size,
        )
    pool = build_pool(spec, pool_size, schedule.seed)
    order = removal_order(pool, schedule.seed)
    return [degrade(pool, schedule, k, order=order) for k in range(schedule.levels)]


__all__ = [
    "DESK_POOL_SIZE",
    "DESK_SCHEDULE",
    "PAPER_POOL_SIZE",
    "PAPER_SCHEDULE",
    "PoolExhaustedError",
    "ShiftSchedule",
    "build_pool",
    "build_shift_suite",
    "degrade",
    "removal_order",
]
