"""Build-cost regression and the incremental EBCCB (cache-break cost) difference.

The EBCCB difference of a solution is computed without re-deriving the whole
module graph: the changed module edges are found from the moved classes,
the changed transitive dependencies from a memoized reverse traversal of
the affected vertices, and only those pairs are priced.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import FitDiverged, InsufficientData, ParseError
from .model import (
    AdjustedState,
    DependencySnapshot,
    ModuleGraph,
    Solution,
    apply_solution,
    compute_transitive_deps,
    module_key,
    pair_key,
)


@dataclass(frozen=True)
class BuildCostModel:
    """Build seconds of a module as ``a * log10(loc)**b + c``."""

    a: float = 1.0
    b: float = 1.0
    c: float = 0.0

    def cost(self, loc) -> float:
        return loc_to_cost(self, loc)

    def to_json(self) -> str:
        return json.dumps({"a": self.a, "b": self.b, "c": self.c}) + "\n"

    @classmethod
    def from_json(cls, data) -> BuildCostModel:
        try:
            doc = json.loads(data)
            model = cls(float(doc["a"]), float(doc["b"]), float(doc["c"]))
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"invalid build-cost model document: {exc}") from exc
        if not all(math.isfinite(v) for v in (model.a, model.b, model.c)):
            raise ParseError("build-cost model parameters must be finite")
        return model


def loc_to_cost(model: BuildCostModel, loc) -> float:
    if loc <= 0:
        return 0.0
    return model.a * math.log10(loc) ** model.b + model.c


# -- regression ---------------------------------------------------------------


def _predict(p, logx):
    a, b, c = p
    with np.errstate(all="ignore"):
        powered = np.where(logx > 0, np.abs(logx) ** b, 0.0)
    return a * powered + c, powered


def _jacobian(p, logx, powered, t):
    a, b, _ = p
    with np.errstate(all="ignore"):
        lnl = np.where(logx > 0, np.log(np.where(logx > 0, logx, 1.0)), 0.0)
    jac = np.empty((logx.size, 3))
    jac[:, 0] = powered
    jac[:, 1] = a * powered * lnl
    jac[:, 2] = 1.0
    return jac / t[:, None]


def fit_build_cost_model(samples, max_iter: int = 500, xtol: float = 1e-9) -> BuildCostModel:
    """Fit ``a*log10(x)**b + c`` minimizing the sum of squared relative errors.

    Levenberg-Marquardt with Marquardt scaling, starting from (1, 1, 0).
    Stops when an accepted step changes the parameters by less than ``xtol``
    relative to their size, or after ``max_iter`` iterations.
    """
    samples = list(samples)
    if len(samples) < 3 or len({s.loc for s in samples}) < 3:
        raise InsufficientData("need at least 3 samples with 3 distinct loc values")
    logx = np.log10(np.array([s.loc for s in samples], dtype=np.float64))
    t = np.array([s.seconds for s in samples], dtype=np.float64)

    def residuals(p):
        pred, powered = _predict(p, logx)
        return (pred - t) / t, powered

    p = np.array([1.0, 1.0, 0.0])
    r, powered = residuals(p)
    if not np.all(np.isfinite(r)):
        raise FitDiverged("non-finite residuals at the initial guess")
    cost = float(r @ r)
    lam = 1e-3
    for _ in range(max_iter):
        jac = _jacobian(p, logx, powered, t)
        jtj = jac.T @ jac
        scale = np.sqrt(np.maximum(np.diag(jtj), 1e-12))
        accepted = False
        while lam < 1e16:
            # damped normal equations solved as an augmented least-squares system
            aug = np.vstack([jac, math.sqrt(lam) * np.diag(scale)])
            rhs = np.concatenate([-r, np.zeros(3)])
            step = np.linalg.lstsq(aug, rhs, rcond=None)[0]
            trial = p + step
            r_new, powered_new = residuals(trial)
            cost_new = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else math.inf
            if cost_new <= cost:
                p, r, powered, cost = trial, r_new, powered_new, cost_new
                lam = max(lam / 10.0, 1e-15)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
        if np.linalg.norm(step) <= xtol * (np.linalg.norm(p) + xtol) or cost == 0.0:
            break
    if not (np.all(np.isfinite(p)) and math.isfinite(cost)):
        raise FitDiverged(f"fit ended with non-finite parameters {p}")
    return BuildCostModel(float(p[0]), float(p[1]), float(p[2]))


# -- changed module edges -----------------------------------------------------


@dataclass(frozen=True)
class EdgeDelta:
    added: frozenset
    removed: frozenset
    changes: dict = field(compare=False)


def get_changed_edges(graph: ModuleGraph, snapshot: DependencySnapshot, solution: Solution) -> EdgeDelta:
    """Module edges introduced or eliminated by the class moves of ``solution``."""
    targets = solution.targets()
    base = snapshot.assignment
    changes = {}
    seen = set()
    for cls in targets:
        deps = [(cls, d) for d in snapshot.out_deps[cls]]
        deps += [(d, cls) for d in snapshot.in_deps[cls]]
        for a, b in deps:
            if (a, b) in seen:
                continue
            seen.add((a, b))
            old = (base[a], base[b])
            new = (targets.get(a, old[0]), targets.get(b, old[1]))
            if old == new:
                continue
            if old[0] != old[1]:
                changes[old] = changes.get(old, 0) - 1
            if new[0] != new[1]:
                changes[new] = changes.get(new, 0) + 1
    edges = graph.edges
    added = frozenset(e for e, d in changes.items() if e not in edges and d > 0)
    removed = frozenset(e for e, d in changes.items() if e in edges and edges[e] + d == 0)
    return EdgeDelta(added, removed, changes)


# -- changed transitive dependencies ------------------------------------------


@dataclass(frozen=True)
class TransDelta:
    """Transitive (dependent, dependency) pairs gained and lost."""

    added: frozenset = frozenset()
    removed: frozenset = frozenset()
    circular: bool = field(default=False, compare=False)


@dataclass
class ReverseReachability:
    """Shared state of the memoized reverse traversal for one solution."""

    rev: dict
    known: dict = field(default_factory=dict)  # vertex -> (vres, this_circular)
    visited: set = field(default_factory=set)
    circular: set = field(default_factory=set)

    @classmethod
    def for_delta(cls, graph: ModuleGraph, added) -> ReverseReachability:
        rev = {v: list(ps) for v, ps in graph.pred.items()}
        for a, b in added:
            rev.setdefault(b, []).append(a)
            rev.setdefault(a, [])
        for v in {b for _, b in added}:
            rev[v] = sorted(set(rev[v]), key=module_key)
        return cls(rev)


def recursive_edge_check(v, graph, removed, added, state: ReverseReachability,
                         reachable=True, edge_prev_exists=True):
    """Reverse-transitive dependencies of ``v`` and whether each still reaches it.

    Traverses baseline plus added edges backwards; removed edges are walked
    but mark everything behind them unreachable unless another path exists.
    Returns ``(vres, this_circular)``.
    """
    if v in state.visited:
        # potential circular dependency
        state.circular.add(v)
        return {v: edge_prev_exists}, reachable
    if v in state.known:
        return state.known[v]
    state.visited.add(v)
    vres = {}
    this_circular = False
    for vo in state.rev.get(v, ()):
        if (vo, v) not in removed:
            vo_res, other = recursive_edge_check(vo, graph, removed, added, state, reachable, True)
            vres[vo] = True
            for voo, flag in vo_res.items():
                if voo == v:
                    state.circular.add(v)
                vres[voo] = vres.get(voo, False) or flag
        else:
            vo_res, other = recursive_edge_check(vo, graph, removed, added, state, False, False)
            vres.setdefault(vo, False)
            for voo in vo_res:
                vres.setdefault(voo, False)
        this_circular = this_circular or other
    vres[v] = vres.get(v, False) or edge_prev_exists
    state.visited.discard(v)
    state.known[v] = (vres, this_circular)
    return vres, this_circular


def _merge(res_u, res_w, w_reaches_u):
    changed = False
    for x, flag in res_w.items():
        if w_reaches_u and flag:
            if not res_u.get(x, False):
                res_u[x] = True
                changed = True
        elif x not in res_u:
            res_u[x] = False
            changed = True
    return changed


def _close_over_cycles(state: ReverseReachability):
    """Complete memo entries truncated where the traversal met its own stack.

    Sweep one lets the vertices found on cycles absorb each other's results;
    sweep two propagates results to every vertex that recorded one of them.
    Both repeat until nothing changes; flags only move from absent to False
    to True, so this terminates.
    """
    known = state.known
    order = sorted(known, key=module_key)
    circ = [v for v in sorted(state.circular, key=module_key) if v in known]
    circ_set = set(circ)
    changed = True
    while changed:
        changed = False
        for u in circ:
            res_u = known[u][0]
            for w in [w for w in res_u if w in circ_set and w != u]:
                changed |= _merge(res_u, known[w][0], res_u[w])
        for u in order:
            res_u = known[u][0]
            for w in [w for w in res_u if w in known and w != u]:
                changed |= _merge(res_u, known[w][0], res_u[w])


def get_changed_trans_deps(graph: ModuleGraph, delta: EdgeDelta, tdeps=None) -> TransDelta:
    """Transitive dependency pairs added and removed by an edge delta."""
    if tdeps is None:
        tdeps = graph.tdeps
    if not delta.added and not delta.removed:
        return TransDelta()
    dests = {b for _, b in delta.added} | {b for _, b in delta.removed}
    to_check = set(dests)
    for d in dests:
        to_check |= tdeps.get(d, frozenset())
    state = ReverseReachability.for_delta(graph, delta.added)
    limit = 4 * len(state.rev) + 200
    if sys.getrecursionlimit() < limit:
        sys.setrecursionlimit(limit)
    circular = False
    for v in sorted(to_check, key=module_key):
        _, this_circular = recursive_edge_check(v, graph, delta.removed, delta.added, state)
        circular = circular or this_circular
    # a vertex only reaches itself through a cycle
    for u, (vres, _) in state.known.items():
        vres.pop(u, None)
    if state.circular:
        _close_over_cycles(state)
    empty = frozenset()
    added, removed = set(), set()
    for v in to_check:
        for vr, ok in state.known[v][0].items():
            before = v in tdeps.get(vr, empty)
            if ok and not before:
                added.add((vr, v))
            elif not ok and before:
                removed.add((vr, v))
    return TransDelta(frozenset(added), frozenset(removed), circular or bool(state.circular))


def trans_delta_oracle(graph: ModuleGraph, snapshot: DependencySnapshot, solution: Solution,
                       state: AdjustedState | None = None) -> TransDelta:
    """Brute-force reference: diff the full closures of both module graphs."""
    if state is None:
        state = apply_solution(snapshot, solution)
    before = compute_transitive_deps(graph.edges, graph.vertices)
    after = compute_transitive_deps(state.edges(), state.modules)
    old = {(v, d) for v, ds in before.items() for d in ds}
    new = {(v, d) for v, ds in after.items() for d in ds}
    return TransDelta(frozenset(new - old), frozenset(old - new))


# -- cost ---------------------------------------------------------------------


def calc_ebccb(delta: TransDelta, state: AdjustedState, model: BuildCostModel) -> float:
    """Cost of gained transitive pairs minus cost of lost ones.

    Each (dependent, dependency) pair is priced as the dependency's build
    cost times its cache breaks: its rate of change minus the commits that
    already touch both modules.
    """

    def price(pair):
        v1, v2 = pair
        breaks = state.roc_of(v2) - state.mods_ct_of(v1, v2)
        return loc_to_cost(model, state.loc_of(v2)) * breaks

    gained = sum(price(p) for p in sorted(delta.added, key=pair_key))
    lost = sum(price(p) for p in sorted(delta.removed, key=pair_key))
    return float(gained - lost)


def calculate_ebccb_diff(graph: ModuleGraph, snapshot: DependencySnapshot, solution: Solution,
                         tdeps, model: BuildCostModel, state: AdjustedState | None = None) -> float:
    if not solution.moves:
        return 0.0
    if state is None:
        state = apply_solution(snapshot, solution)
    edges = get_changed_edges(graph, snapshot, solution)
    trans = get_changed_trans_deps(graph, edges, tdeps)
    return calc_ebccb(trans, state, model)
