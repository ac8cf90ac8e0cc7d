"""Cohesion, coupling and effort metrics and baseline-relative objective vectors.

All objective components are minimized and measured against the existing
architecture: the empty solution scores zero everywhere, and metrics that
are naturally maximized (IntraMD, CCP, CRP) are flipped.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .buildcost import BuildCostModel, calculate_ebccb_diff
from .model import EMPTY, AdjustedState, DependencySnapshot, Solution, apply_solution

OBJECTIVES = ("intra_md", "inter_md", "ebccb", "changes", "ccp", "crp")

# Objective sets cfg1..cfg11; cfg1 is the default.
PRESETS = {
    "cfg1": ("intra_md", "inter_md", "ebccb", "changes"),
    "cfg2": ("intra_md", "inter_md"),
    "cfg3": ("inter_md", "crp", "ccp"),
    "cfg4": ("intra_md", "inter_md", "ebccb", "ccp", "crp", "changes"),
    "cfg5": ("intra_md", "ebccb"),
    "cfg6": ("intra_md", "inter_md", "changes"),
    "cfg7": ("intra_md", "ccp", "crp"),
    "cfg8": ("inter_md", "ebccb"),
    "cfg9": ("inter_md", "ccp", "crp", "ebccb", "changes"),
    "cfg10": ("intra_md", "ebccb", "changes"),
    "cfg11": ("ccp", "crp", "ebccb", "changes"),
}


@dataclass(frozen=True)
class ObjectiveVector:
    intra_md_delta: float = 0.0
    inter_md_delta: int = 0
    ebccb_delta: float = 0.0
    change_count: int = 0
    ccp_delta: int | None = None
    crp_delta: int | None = None

    _FIELDS = {
        "intra_md": "intra_md_delta",
        "inter_md": "inter_md_delta",
        "ebccb": "ebccb_delta",
        "changes": "change_count",
        "ccp": "ccp_delta",
        "crp": "crp_delta",
    }

    def get(self, objective: str):
        return getattr(self, self._FIELDS[objective])

    def values(self, objectives) -> tuple:
        return tuple(float(self.get(o)) for o in objectives)

    def as_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def intra_md(state: AdjustedState) -> float:
    """Sum over non-empty modules of intra dependencies / n(n-1); singletons score 1."""
    total = 0.0
    diag = np.diagonal(state.weights)
    for n, intra in zip(state.members.tolist(), diag.tolist()):
        if n == 1:
            total += 1.0
        elif n > 1:
            total += intra / (n * (n - 1))
    return total


def inter_md(state: AdjustedState) -> int:
    w = state.weights
    return int(np.count_nonzero(w) - np.count_nonzero(np.diagonal(w)))


def ccp(state: AdjustedState) -> int:
    return state.ccp


def crp(state: AdjustedState, snapshot: DependencySnapshot) -> int:
    return int(kernels.colocated_pairs(state.assignment, snapshot.client_ptr, snapshot.client_members))


def change_count(solution: Solution) -> int:
    return len(solution)


@dataclass(frozen=True)
class Baseline:
    intra_md: float
    inter_md: int
    ccp: int
    crp: int

    @classmethod
    def of(cls, snapshot: DependencySnapshot) -> Baseline:
        state = apply_solution(snapshot, EMPTY)
        return cls(intra_md(state), inter_md(state), ccp(state), crp(state, snapshot))


def objective_vector(snapshot: DependencySnapshot, baseline: Baseline, solution: Solution,
                     model: BuildCostModel, flags=("ccp", "crp")) -> ObjectiveVector:
    """Baseline-relative objectives of ``solution``; ``flags`` enables CCP/CRP."""
    if not solution.moves:
        return ObjectiveVector(
            ccp_delta=0 if "ccp" in flags else None,
            crp_delta=0 if "crp" in flags else None,
        )
    state = apply_solution(snapshot, solution)
    ebccb = calculate_ebccb_diff(snapshot.graph, snapshot, solution, snapshot.graph.tdeps,
                                 model, state)
    return ObjectiveVector(
        intra_md_delta=baseline.intra_md - intra_md(state),
        inter_md_delta=inter_md(state) - baseline.inter_md,
        ebccb_delta=ebccb,
        change_count=len(solution),
        ccp_delta=baseline.ccp - ccp(state) if "ccp" in flags else None,
        crp_delta=baseline.crp - crp(state, snapshot) if "crp" in flags else None,
    )


class Evaluator:
    """Objective evaluation bound to one snapshot, cost model and objective set."""

    def __init__(self, snapshot: DependencySnapshot, model: BuildCostModel,
                 objectives=PRESETS["cfg1"]):
        unknown = set(objectives) - set(OBJECTIVES)
        if unknown:
            raise ValueError(f"unknown objectives {sorted(unknown)}")
        self.snapshot = snapshot
        self.model = model
        self.objectives = tuple(objectives)
        self.flags = tuple(o for o in ("ccp", "crp") if o in self.objectives)
        self.baseline = Baseline.of(snapshot)

    def __call__(self, solution: Solution) -> ObjectiveVector:
        return objective_vector(self.snapshot, self.baseline, solution, self.model, self.flags)

    def values(self, vector: ObjectiveVector) -> tuple:
        return vector.values(self.objectives)
