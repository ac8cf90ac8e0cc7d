"""Search-based move-class refactoring for build-cache-aware modularization."""
from .buildcost import BuildCostModel, fit_build_cost_model
from .errors import RemodError
from .metrics import PRESETS, Evaluator, ObjectiveVector
from .model import Commit, DependencySnapshot, Move, New, Solution, apply_solution, normalize_solution
from .search import SearchConfig, evolve

__version__ = "0.1.0"

__all__ = [
    "BuildCostModel",
    "Commit",
    "DependencySnapshot",
    "Evaluator",
    "Move",
    "New",
    "ObjectiveVector",
    "PRESETS",
    "RemodError",
    "SearchConfig",
    "Solution",
    "apply_solution",
    "evolve",
    "fit_build_cost_model",
    "normalize_solution",
    "__version__",
]
