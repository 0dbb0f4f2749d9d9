"""Pareto dominance, non-dominated sorting and crowding distance.

All routines use the minimization convention: smaller objective values are
better. Objective sets are ``(n, m)`` float arrays; :class:`SolutionSet`
bundles them with the (optional) designs that produced them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SolutionSet:
    """Objective vectors with optionally aligned design vectors.

    Attributes:
        objectives: ``(n, m)`` array, ``m >= 2``, all entries finite.
        designs: ``(n, d)`` array aligned row-for-row with ``objectives``,
            or ``None`` for objective-space-only sets.
    """

    objectives: np.ndarray
    designs: np.ndarray | None = None

    def __post_init__(self) -> None:
        objectives = np.atleast_2d(np.asarray(self.objectives, dtype=float))
        if objectives.ndim != 2 or objectives.shape[1] < 2:
            raise ValueError(f"objectives must have shape (n, m>=2), got {objectives.shape}")
        if not np.all(np.isfinite(objectives)):
            raise ValueError("objectives contain non-finite values")
        object.__setattr__(self, "objectives", objectives)
        if self.designs is not None:
            designs = np.atleast_2d(np.asarray(self.designs, dtype=float))
            if designs.shape[0] != objectives.shape[0]:
                raise ValueError(
                    f"{designs.shape[0]} designs for {objectives.shape[0]} objective vectors"
                )
            object.__setattr__(self, "designs", designs)

    def __len__(self) -> int:
        return self.objectives.shape[0]

    @property
    def n_obj(self) -> int:
        return self.objectives.shape[1]

    def subset(self, index) -> SolutionSet:
        designs = None if self.designs is None else self.designs[index]
        return SolutionSet(self.objectives[index], designs)


def as_objectives(points) -> np.ndarray:
    """Return the ``(n, m)`` objective array of a SolutionSet or array-like."""
    if isinstance(points, SolutionSet):
        return points.objectives
    if hasattr(points, "objectives"):
        return np.asarray(points.objectives, dtype=float)
    return np.atleast_2d(np.asarray(points, dtype=float))


@dataclass(frozen=True)
class FrontRanking:
    """Partition of a point set into successive non-dominated fronts.

    ``fronts[0]`` holds the indices of the non-dominated points, ``fronts[1]``
    those that are non-dominated once front 0 is removed, and so on.
    ``rank[i]`` is the front index of point ``i``.
    """

    fronts: list[np.ndarray]
    rank: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.fronts)


def dominates(a, b) -> bool:
    """True iff ``a`` Pareto-dominates ``b`` under minimization.

    ``a`` must be no worse in every objective and strictly better in at
    least one; equal vectors never dominate each other.

    >>> dominates([0.0, 0.0], [1.0, 1.0])
    True
    >>> dominates([0.0, 1.0], [1.0, 0.0])
    False
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def dominance_matrix(objectives) -> np.ndarray:
    """Boolean ``(n, n)`` matrix with ``D[i, j]`` true iff point i dominates j."""
    f = as_objectives(objectives)
    leq = np.all(f[:, None, :] <= f[None, :, :], axis=2)
    lt = np.any(f[:, None, :] < f[None, :, :], axis=2)
    return leq & lt


def _dominated_by_front(point: np.ndarray, front: np.ndarray) -> bool:
    return bool(np.any(np.all(front <= point, axis=1) & np.any(front < point, axis=1)))


def fast_nondominated_sort(points) -> FrontRanking:
    """Sort points into non-dominated fronts.

    Points are visited in lexicographic order, so no later point can
    dominate an earlier one, and each point is placed into the first front
    that contains no point dominating it. Because "front i dominates p"
    implies "front i-1 dominates p", that front is found by binary search.
    With two objectives the front check reduces to a comparison against the
    front's last member. Worst case O(m n^2), typically O(m n log n).

    Args:
        points: SolutionSet or ``(n, m)`` objective array, ``n >= 1``.

    Returns:
        FrontRanking whose fronts list indices in ascending order.

    Raises:
        ValueError: for an empty set or non-finite objectives.
    """
    f = as_objectives(points)
    n = f.shape[0]
    if n == 0 or f.size == 0:
        raise ValueError("cannot sort an empty set")
    if not np.all(np.isfinite(f)):
        raise ValueError("objectives contain non-finite values")

    order = np.lexsort(f.T[::-1])
    rank = np.empty(n, dtype=np.int64)
    members: list[list[int]] = []

    if f.shape[1] == 2:
        # Within a front (visited in lexicographic order) f2 is non-increasing,
        # so the last member has the smallest f2 and decides dominance.
        last: list[tuple[float, float]] = []
        for i in order:
            p = (f[i, 0], f[i, 1])

            def dominated(k: int) -> bool:
                q = last[k]
                return q[1] <= p[1] and q != p

            lo, hi = 0, len(last)
            while lo < hi:
                mid = (lo + hi) // 2
                if dominated(mid):
                    lo = mid + 1
                else:
                    hi = mid
            if lo == len(last):
                last.append(p)
                members.append([int(i)])
            else:
                last[lo] = p
                members[lo].append(int(i))
            rank[i] = lo
    else:
        front_arrays: list[np.ndarray] = []
        dirty: list[bool] = []

        def front_array(k: int) -> np.ndarray:
            if dirty[k]:
                front_arrays[k] = f[members[k]]
                dirty[k] = False
            return front_arrays[k]

        for i in order:
            p = f[i]
            lo, hi = 0, len(members)
            while lo < hi:
                mid = (lo + hi) // 2
                if _dominated_by_front(p, front_array(mid)):
                    lo = mid + 1
                else:
                    hi = mid
            if lo == len(members):
                members.append([int(i)])
                front_arrays.append(f[[i]])
                dirty.append(False)
            else:
                members[lo].append(int(i))
                dirty[lo] = True
            rank[i] = lo

    fronts = [np.sort(np.asarray(idx, dtype=np.int64)) for idx in members]
    return FrontRanking(fronts=fronts, rank=rank)


def nondominated_mask(points) -> np.ndarray:
    """Boolean mask of the points that no other point dominates.

    Two-objective sets take an O(n log n) sweep; otherwise this is front 0
    of :func:`fast_nondominated_sort`.
    """
    f = as_objectives(points)
    if f.shape[1] != 2:
        return fast_nondominated_sort(f).rank == 0
    order = np.lexsort(f.T[::-1])
    g = f[order]
    prev_min = np.concatenate(([np.inf], np.minimum.accumulate(g[:-1, 1])))
    keep = g[:, 1] < prev_min
    # identical points share the fate of the first copy in their run
    same = np.concatenate(([False], np.all(g[1:] == g[:-1], axis=1)))
    run_start = np.maximum.accumulate(np.where(~same, np.arange(len(g)), 0))
    keep = keep[run_start]
    mask = np.empty(len(f), dtype=bool)
    mask[order] = keep
    return mask


def crowding_distance(front) -> np.ndarray:
    """Crowding distance of each member of one front.

    Per objective, the two extreme points get ``+inf`` and every interior
    point accumulates the gap between its neighbours divided by the
    objective's range. A zero range is replaced by 1; such an objective has
    no distinct extremes, so it marks no boundary and all gaps are 0. An
    all-duplicate front therefore gets finite, equal crowding.

    Args:
        front: ``(k, m)`` objectives of mutually non-dominated points.

    Returns:
        ``(k,)`` array; all ``+inf`` when ``k < 3``.
    """
    f = as_objectives(front)
    k = f.shape[0]
    if k < 3:
        return np.full(k, np.inf)
    distance = np.zeros(k)
    for j in range(f.shape[1]):
        order = np.argsort(f[:, j], kind="stable")
        values = f[order, j]
        span = values[-1] - values[0]
        if span <= 0:
            continue
        distance[order[1:-1]] += (values[2:] - values[:-2]) / span
        distance[order[0]] = np.inf
        distance[order[-1]] = np.inf
    return distance


def rank_and_crowding_order(objectives, n_select: int | None = None) -> np.ndarray:
    """Indices ordered by (front rank ascending, crowding distance descending).

    This is the NSGA-II survival order; the first ``n_select`` indices are
    returned (all when ``None``). Crowding is computed within each front.
    """
    f = as_objectives(objectives)
    ranking = fast_nondominated_sort(f)
    n_select = f.shape[0] if n_select is None else n_select
    chosen: list[np.ndarray] = []
    taken = 0
    for front in ranking.fronts:
        if taken >= n_select:
            break
        cd = crowding_distance(f[front])
        # stable sort keeps ties in index order
        ordered = front[np.argsort(-cd, kind="stable")]
        chosen.append(ordered[: n_select - taken])
        taken += len(chosen[-1])
    return np.concatenate(chosen)


def crowding_from_ranking(objectives, ranking: FrontRanking) -> np.ndarray:
    """Per-point crowding distance computed inside each point's own front."""
    f = as_objectives(objectives)
    out = np.empty(f.shape[0])
    for front in ranking.fronts:
        out[front] = crowding_distance(f[front])
    return out


__all__ = [
    "FrontRanking",
    "SolutionSet",
    "as_objectives",
    "crowding_distance",
    "crowding_from_ranking",
    "dominance_matrix",
    "dominates",
    "fast_nondominated_sort",
    "nondominated_mask",
    "rank_and_crowding_order",
]
