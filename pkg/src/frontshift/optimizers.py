"""The two method families compared on offline data.

``evo-nsga2`` searches the design space with NSGA-II against a surrogate.
``gen-resampler`` only perturbs offline designs, a minimal stand-in for a
generative model that reproduces the offline distribution. Neither method
queries the true objectives during search; the returned sets are scored on
true objectives afterwards.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import asdict, dataclass

import numpy as np

from .pareto import SolutionSet, crowding_from_ranking, fast_nondominated_sort, rank_and_crowding_order
from .problems import OfflineDataset, ProblemSpec, evaluate
from .surrogate import SurrogateModel

METHODS = ("evo-nsga2", "gen-resampler")


@dataclass(frozen=True)
class Nsga2Config:
    population: int = 256
    generations: int = 100
    eta_c: float = 15.0
    p_crossover: float = 0.9
    eta_m: float = 20.0
    p_mutation: float | None = None  # per gene; None means 1/d
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population < 2 or self.population % 2:
            raise ValueError(f"population must be even and >= 2, got {self.population}")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not 0.0 <= self.p_crossover <= 1.0:
            raise ValueError("p_crossover must lie in [0, 1]")
        if self.p_mutation is not None and not 0.0 <= self.p_mutation <= 1.0:
            raise ValueError("p_mutation must lie in [0, 1]")
        if self.eta_c < 0 or self.eta_m < 0:
            raise ValueError("distribution indices must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ResamplerConfig:
    """Settings of the conservative resampler.

    ``bandwidth`` is the Gaussian perturbation scale: ``None`` for half of
    Silverman's rule per coordinate, a float for an isotropic scale.
    ``filter`` is ``"none"`` or ``"nondominated_by_surrogate"``.
    """

    bandwidth: float | None = None
    candidates_per_output: int = 4
    filter: str = "nondominated_by_surrogate"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if self.candidates_per_output < 1:
            raise ValueError("candidates_per_output must be >= 1")
        if self.filter not in ("none", "nondominated_by_surrogate"):
            raise ValueError(f"unknown filter {self.filter!r}")

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# variation operators on the unit box


def sbx_crossover(parents: np.ndarray, eta: float, prob: float, rng: np.random.Generator) -> np.ndarray:
    """Simulated binary crossover (Deb & Agrawal) of consecutive parent pairs in [0, 1]."""
    p1, p2 = parents[0::2], parents[1::2]
    c1, c2 = p1.copy(), p2.copy()
    n_pairs, d = p1.shape
    do_pair = rng.random(n_pairs) < prob
    do_var = (rng.random((n_pairs, d)) < 0.5) & do_pair[:, None] & (np.abs(p1 - p2) > 1e-14)
    u = rng.random((n_pairs, d))
    swap = rng.random((n_pairs, d)) < 0.5

    y1 = np.minimum(p1, p2)
    y2 = np.maximum(p1, p2)
    span = np.where(do_var, y2 - y1, 1.0)
    expo = 1.0 / (eta + 1.0)

    def spread(beta: np.ndarray) -> np.ndarray:
        alpha = 2.0 - beta ** (-(eta + 1.0))
        low = u <= 1.0 / alpha
        with np.errstate(invalid="ignore", divide="ignore"):
            q = np.where(low, (u * alpha) ** expo, (1.0 / (2.0 - u * alpha)) ** expo)
        return q

    q1 = spread(1.0 + 2.0 * y1 / span)
    q2 = spread(1.0 + 2.0 * (1.0 - y2) / span)
    child1 = np.clip(0.5 * ((y1 + y2) - q1 * span), 0.0, 1.0)
    child2 = np.clip(0.5 * ((y1 + y2) + q2 * span), 0.0, 1.0)
    a = np.where(swap, child2, child1)
    b = np.where(swap, child1, child2)
    c1[do_var] = a[do_var]
    c2[do_var] = b[do_var]

    out = np.empty_like(parents)
    out[0::2], out[1::2] = c1, c2
    return out


def polynomial_mutation(x: np.ndarray, eta: float, prob: float, rng: np.random.Generator) -> np.ndarray:
    """Bounded polynomial mutation (Deb & Goyal) in [0, 1]."""
    y = x.copy()
    mask = rng.random(x.shape) < prob
    u = rng.random(x.shape)
    power = 1.0 / (eta + 1.0)
    low = u < 0.5
    d1, d2 = y, 1.0 - y
    val_lo = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)
    val_hi = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)
    delta = np.where(low, val_lo**power - 1.0, 1.0 - val_hi**power)
    y[mask] = np.clip(y[mask] + delta[mask], 0.0, 1.0)
    return y


def _tournament(rank: np.ndarray, crowd: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.integers(0, len(rank), n)
    b = rng.integers(0, len(rank), n)
    a_wins = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] >= crowd[b]))
    return np.where(a_wins, a, b)


# --------------------------------------------------------------------------
# methods


def _initial_population(data: OfflineDataset, size: int, rng: np.random.Generator) -> np.ndarray:
    front = fast_nondominated_sort(data.objectives).fronts[0]
    if len(front) > size:
        front = front[rank_and_crowding_order(data.objectives[front], size)]
    seeded = data.designs[front]
    pad = rng.random((size - len(seeded), data.problem.d))
    return np.vstack([seeded, pad])


def nsga2_offline(
    data: OfflineDataset,
    model: SurrogateModel,
    cfg: Nsga2Config = Nsga2Config(),
    out_n: int = 256,
    *,
    problem: ProblemSpec | None = None,
    callback: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
) -> SolutionSet:
    """Run NSGA-II on surrogate predictions and score the result on true objectives.

    The initial population holds the offline non-dominated designs padded
    with uniform random designs. Each generation produces ``population``
    offspring by binary tournament on (rank, crowding), SBX and polynomial
    mutation, then keeps the best ``population`` of parents plus offspring.

    Args:
        data: offline dataset; its problem supplies bounds and scoring.
        model: surrogate fitted on ``data``.
        cfg: NSGA-II settings.
        out_n: number of designs returned, at most ``cfg.population``.
        problem: problem used for final scoring (defaults to ``data.problem``).
        callback: called as ``callback(generation, designs, predicted)`` for
            the initial population and after every generation.

    Returns:
        The first ``out_n`` designs of the final population in (rank,
        crowding) order, with their true objective values.
    """
    if not 1 <= out_n <= cfg.population:
        raise ValueError(f"out_n must lie in 1..{cfg.population}, got {out_n}")
    problem = data.problem if problem is None else problem
    if model.n_var != problem.d:
        raise ValueError("surrogate was fitted on a different design dimension")
    rng = np.random.default_rng(cfg.seed)
    p_mut = 1.0 / problem.d if cfg.p_mutation is None else cfg.p_mutation

    X = _initial_population(data, cfg.population, rng)
    F = model.predict(X)
    if callback is not None:
        callback(0, X, F)
    for gen in range(1, cfg.generations + 1):
        ranking = fast_nondominated_sort(F)
        crowd = crowding_from_ranking(F, ranking)
        parents = X[_tournament(ranking.rank, crowd, cfg.population, rng)]
        children = sbx_crossover(parents, cfg.eta_c, cfg.p_crossover, rng)
        children = polynomial_mutation(children, cfg.eta_m, p_mut, rng)
        Xc = np.vstack([X, children])
        Fc = np.vstack([F, model.predict(children)])
        keep = rank_and_crowding_order(Fc, cfg.population)
        X, F = Xc[keep], Fc[keep]
        if callback is not None:
            callback(gen, X, F)

    best = rank_and_crowding_order(F, out_n)
    designs = X[best]
    return SolutionSet(evaluate(problem, designs), designs)


def silverman_bandwidth(designs: np.ndarray) -> np.ndarray:
    """Silverman's rule-of-thumb Gaussian KDE scale per coordinate."""
    n, d = designs.shape
    factor = (4.0 / (d + 2.0)) ** (1.0 / (d + 4.0)) * n ** (-1.0 / (d + 4.0))
    std = designs.std(axis=0, ddof=1) if n > 1 else np.zeros(d)
    return np.where(std > 0, factor * std, 1e-3)


def conservative_resample(
    data: OfflineDataset,
    model: SurrogateModel | None,
    cfg: ResamplerConfig = ResamplerConfig(),
    out_n: int = 256,
    *,
    problem: ProblemSpec | None = None,
) -> SolutionSet:
    """Sample near the offline designs and keep the surrogate's best.

    Draws ``out_n * candidates_per_output`` candidates, each a uniformly
    chosen offline design plus Gaussian noise (clipped to the box). With the
    surrogate filter the ``out_n`` best candidates by predicted (rank,
    crowding) are kept; otherwise the first ``out_n`` candidates.
    """
    if out_n < 1:
        raise ValueError("out_n must be >= 1")
    problem = data.problem if problem is None else problem
    rng = np.random.default_rng(cfg.seed)
    scale = 0.5 * silverman_bandwidth(data.designs) if cfg.bandwidth is None else cfg.bandwidth
    n_cand = out_n * cfg.candidates_per_output
    base = rng.integers(0, len(data), n_cand)
    noise = rng.standard_normal((n_cand, problem.d)) * scale
    candidates = np.clip(data.designs[base] + noise, 0.0, 1.0)

    if cfg.filter == "nondominated_by_surrogate":
        if model is None:
            raise ValueError("the surrogate filter needs a model")
        chosen = rank_and_crowding_order(model.predict(candidates), out_n)
    else:
        chosen = np.arange(out_n)
    designs = candidates[chosen]
    return SolutionSet(evaluate(problem, designs), designs)


def run_method(
    method: str,
    data: OfflineDataset,
    model: SurrogateModel,
    *,
    seed: int,
    out_n: int = 256,
    nsga2: Nsga2Config | None = None,
    resampler: ResamplerConfig | None = None,
) -> SolutionSet:
    """Dispatch on a method name from :data:`METHODS`, overriding config seeds."""
    if method == "evo-nsga2":
        cfg = Nsga2Config(**{**(nsga2 or Nsga2Config()).to_dict(), "seed": seed})
        return nsga2_offline(data, model, cfg, out_n)
    if method == "gen-resampler":
        cfg = ResamplerConfig(**{**(resampler or ResamplerConfig()).to_dict(), "seed": seed})
        return conservative_resample(data, model, cfg, out_n)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


__all__ = [
    "METHODS",
    "Nsga2Config",
    "ResamplerConfig",
    "conservative_resample",
    "nsga2_offline",
    "polynomial_mutation",
    "run_method",
    "sbx_crossover",
    "silverman_bandwidth",
]
