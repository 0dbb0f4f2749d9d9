"""Offline multi-objective optimization under controlled distribution shift.

Benchmark problems with known Pareto fronts, shift suites that move offline
datasets away from the front, two method families (surrogate-guided
NSGA-II and a conservative resampler), front-based quality indicators and
the experiment grid that ties them together.
"""

from .diagnostics import ExperimentGrid, correlate, desk_grid, run_grid, verify_lemma1
from .metrics import KernelConfig, MetricReport, ObjectiveScaler, evaluate_set
from .optimizers import METHODS, run_method
from .pareto import SolutionSet, crowding_distance, dominates, fast_nondominated_sort
from .problems import OfflineDataset, ProblemSpec, evaluate, front_discretization, make_problem
from .shift_lab import ShiftSchedule, build_shift_suite
from .surrogate import SurrogateModel, fit

__version__ = "0.1.0"

__all__ = [
    "METHODS",
    "ExperimentGrid",
    "KernelConfig",
    "MetricReport",
    "ObjectiveScaler",
    "OfflineDataset",
    "ProblemSpec",
    "ShiftSchedule",
    "SolutionSet",
    "SurrogateModel",
    "build_shift_suite",
    "correlate",
    "crowding_distance",
    "desk_grid",
    "dominates",
    "evaluate",
    "evaluate_set",
    "fast_nondominated_sort",
    "fit",
    "front_discretization",
    "make_problem",
    "run_grid",
    "run_method",
    "verify_lemma1",
]
