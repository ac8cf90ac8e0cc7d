"""Codebase snapshot, module graph, move-class solutions and adjusted states."""
from __future__ import annotations

import graphlib
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

import numpy as np

from . import kernels
from .errors import CyclicModuleGraph, UnknownClass, ValidationError


@dataclass(frozen=True, order=True)
class New:
    """A module created by a solution; ``tag`` is local to that solution."""

    tag: int

    def __str__(self):
        return f"NEW#{self.tag}"


ModuleRef = Union[str, New]


def module_key(m: ModuleRef):
    """Total order over module refs: existing modules by name, then new ones by tag."""
    if isinstance(m, New):
        return (1, m.tag, "")
    return (0, 0, m)


def pair_key(pair):
    return (module_key(pair[0]), module_key(pair[1]))


@dataclass(frozen=True)
class Move:
    cls: str
    target: ModuleRef

    def __str__(self):
        return f"{self.cls}->{self.target}"


@dataclass(frozen=True)
class Commit:
    id: str
    classes: tuple

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(sorted(set(self.classes))))
        if not self.classes:
            raise ValidationError(f"commit {self.id!r} changes no classes")


@dataclass(frozen=True)
class Solution:
    """Canonical set of move-class operations, sorted by class id."""

    moves: tuple = ()

    def __len__(self):
        return len(self.moves)

    def __iter__(self):
        return iter(self.moves)

    def __str__(self):
        return "{" + ", ".join(str(m) for m in self.moves) + "}"

    def targets(self) -> dict:
        return {m.cls: m.target for m in self.moves}

    def new_tags(self) -> list:
        return sorted({m.target.tag for m in self.moves if isinstance(m.target, New)})


EMPTY = Solution()


@dataclass(frozen=True)
class ModuleGraph:
    vertices: tuple
    edges: dict  # (src, dst) -> number of class dependencies
    tdeps: dict  # module -> frozenset of transitively reachable modules
    succ: dict = field(repr=False)
    pred: dict = field(repr=False)


def _adjacency(edges, vertices):
    succ = {v: [] for v in vertices}
    pred = {v: [] for v in vertices}
    for a, b in edges:
        succ.setdefault(a, []).append(b)
        pred.setdefault(b, []).append(a)
        succ.setdefault(b, [])
        pred.setdefault(a, [])
    succ = {v: tuple(sorted(ns, key=module_key)) for v, ns in succ.items()}
    pred = {v: tuple(sorted(ns, key=module_key)) for v, ns in pred.items()}
    return succ, pred


def compute_transitive_deps(edges, vertices=()) -> dict:
    """Reachability closure of a directed edge set.

    A vertex appears in its own set only when it lies on a cycle.
    """
    succ, _ = _adjacency(edges, vertices)
    closure = {}
    for start in succ:
        seen = set()
        queue = deque(succ[start])
        while queue:
            v = queue.popleft()
            if v in seen:
                continue
            seen.add(v)
            queue.extend(succ[v])
        closure[start] = frozenset(seen)
    return closure


def find_cycle(edges, vertices=()):
    """Return one directed cycle as a vertex list, or None."""
    graph = {v: set() for v in vertices}
    for a, b in edges:
        graph.setdefault(a, set())
        graph.setdefault(b, set()).add(a)
    try:
        tuple(graphlib.TopologicalSorter(graph).static_order())
    except graphlib.CycleError as exc:
        return list(exc.args[1])
    return None


def derive_module_graph(snapshot: DependencySnapshot) -> ModuleGraph:
    edges = {}
    for a, b in snapshot.dependencies:
        ma, mb = snapshot.assignment[a], snapshot.assignment[b]
        if ma != mb:
            edges[(ma, mb)] = edges.get((ma, mb), 0) + 1
    cycle = find_cycle(edges, snapshot.modules)
    if cycle is not None:
        raise CyclicModuleGraph(cycle)
    succ, pred = _adjacency(edges, snapshot.modules)
    tdeps = compute_transitive_deps(edges, snapshot.modules)
    return ModuleGraph(snapshot.modules, edges, tdeps, succ, pred)


def _csr(groups):
    ptr = [0]
    flat = []
    for g in groups:
        flat.extend(g)
        ptr.append(len(flat))
    return np.asarray(ptr, dtype=np.int64), np.asarray(flat, dtype=np.int64)


class DependencySnapshot:
    """Immutable ground truth: classes, dependencies, modules, sizes and history.

    Construction validates everything, including that the derived module
    graph is acyclic.
    """

    def __init__(
        self,
        assignment: Mapping[str, str],
        dependencies: Iterable,
        loc: Mapping[str, int],
        history: Iterable[Commit] = (),
    ):
        if not assignment:
            raise ValidationError("snapshot has no classes")
        for cls, mod in assignment.items():
            if not isinstance(cls, str) or not cls:
                raise ValidationError(f"invalid class id {cls!r}")
            if not isinstance(mod, str) or not mod:
                raise ValidationError(f"class {cls!r} has invalid module {mod!r}")
        self.assignment = dict(assignment)
        self.classes = tuple(sorted(self.assignment))
        self.modules = tuple(sorted(set(self.assignment.values())))

        deps = set()
        for pair in dependencies:
            a, b = pair
            if a not in self.assignment or b not in self.assignment:
                raise ValidationError(f"dependency {a!r}->{b!r} names an unknown class")
            if a == b:
                raise ValidationError(f"self-dependency on {a!r}")
            deps.add((a, b))
        self.dependencies = tuple(sorted(deps))

        self.loc = {}
        for cls in self.classes:
            value = loc.get(cls)
            if value is None:
                raise ValidationError(f"class {cls!r} has no loc")
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValidationError(f"class {cls!r} has nonpositive loc {value!r}")
            self.loc[cls] = int(value)

        commits = []
        for c in history:
            unknown = [x for x in c.classes if x not in self.assignment]
            if unknown:
                raise ValidationError(f"commit {c.id!r} names unknown classes {unknown}")
            commits.append(c)
        self.history = tuple(commits)

        self.class_index = {c: i for i, c in enumerate(self.classes)}
        self.module_index = {m: i for i, m in enumerate(self.modules)}
        ci = self.class_index
        self.assign0 = np.array(
            [self.module_index[self.assignment[c]] for c in self.classes], dtype=np.int64
        )
        self.dep_src = np.array([ci[a] for a, _ in self.dependencies], dtype=np.int64)
        self.dep_dst = np.array([ci[b] for _, b in self.dependencies], dtype=np.int64)
        self.loc_arr = np.array([self.loc[c] for c in self.classes], dtype=np.int64)
        self.commit_ptr, self.commit_cls = _csr(
            [[ci[x] for x in c.classes] for c in self.history]
        )
        self.change_counts = np.bincount(self.commit_cls, minlength=len(self.classes)).astype(
            np.int64
        )

        out_deps = {c: [] for c in self.classes}
        in_deps = {c: [] for c in self.classes}
        for a, b in self.dependencies:
            out_deps[a].append(b)
            in_deps[b].append(a)
        self.out_deps = {c: tuple(v) for c, v in out_deps.items()}
        self.in_deps = {c: tuple(v) for c, v in in_deps.items()}
        self.client_ptr, self.client_members = _csr(
            [[ci[x] for x in self.out_deps[c]] for c in self.classes if len(self.out_deps[c]) > 1]
        )

        self.graph = derive_module_graph(self)

    def __eq__(self, other):
        if not isinstance(other, DependencySnapshot):
            return NotImplemented
        return (
            self.assignment == other.assignment
            and self.dependencies == other.dependencies
            and self.loc == other.loc
            and self.history == other.history
        )

    def __repr__(self):
        return (
            f"DependencySnapshot({len(self.classes)} classes, {len(self.modules)} modules, "
            f"{len(self.dependencies)} deps, {len(self.history)} commits)"
        )

    def with_history(self, history):
        return DependencySnapshot(self.assignment, self.dependencies, self.loc, history)

    def with_assignment(self, assignment):
        return DependencySnapshot(assignment, self.dependencies, self.loc, self.history)

    def neighbors(self, cls):
        """Classes sharing a dependency with ``cls`` in either direction, sorted."""
        return tuple(sorted(set(self.out_deps[cls]) | set(self.in_deps[cls])))


def normalize_solution(moves, snapshot: DependencySnapshot | None) -> Solution:
    """Canonicalize a raw move list.

    Last write wins per class, moves to the class's own module are dropped,
    and new-module tags are renumbered by first appearance in class order.
    """
    assignment = snapshot.assignment if snapshot is not None else {}
    latest = {}
    for mv in moves:
        cls, target = (mv.cls, mv.target) if isinstance(mv, Move) else mv
        latest[cls] = target
    kept = []
    for cls in sorted(latest):
        target = latest[cls]
        if not isinstance(target, New) and assignment.get(cls) == target:
            continue
        kept.append((cls, target))
    renumber = {}
    out = []
    for cls, target in kept:
        if isinstance(target, New):
            if target.tag not in renumber:
                renumber[target.tag] = New(len(renumber))
            target = renumber[target.tag]
        out.append(Move(cls, target))
    return Solution(tuple(out))


@dataclass
class AdjustedState:
    """Module-level figures after applying a solution to a snapshot.

    Module index ``i < k`` is ``snapshot.modules[i]``; index ``k + t`` is
    ``New(t)``.
    """

    modules: tuple
    index: dict
    assignment: np.ndarray
    members: np.ndarray
    loc: np.ndarray
    roc: np.ndarray
    mods_ct: np.ndarray
    weights: np.ndarray
    ccp: int
    emptied: frozenset
    created: frozenset
    classes: tuple = field(repr=False, default=())

    def module_of(self, cls_index: int) -> ModuleRef:
        return self.modules[self.assignment[cls_index]]

    def effective_assignment(self) -> dict:
        return {c: self.modules[m] for c, m in zip(self.classes, self.assignment.tolist())}

    def loc_of(self, m) -> int:
        i = self.index.get(m)
        return 0 if i is None else int(self.loc[i])

    def roc_of(self, m) -> int:
        i = self.index.get(m)
        return 0 if i is None else int(self.roc[i])

    def mods_ct_of(self, a, b) -> int:
        i, j = self.index.get(a), self.index.get(b)
        if i is None or j is None or i == j:
            return 0
        return int(self.mods_ct[i, j])

    def edges(self) -> dict:
        """Cross-module dependency weights of the adjusted module graph."""
        w = self.weights.copy()
        np.fill_diagonal(w, 0)
        rows, cols = np.nonzero(w)
        return {
            (self.modules[i], self.modules[j]): int(w[i, j])
            for i, j in zip(rows.tolist(), cols.tolist())
        }


def apply_solution(snapshot: DependencySnapshot, solution: Solution) -> AdjustedState:
    k = len(snapshot.modules)
    tags = solution.new_tags()
    modules = snapshot.modules + tuple(New(t) for t in tags)
    index = {m: i for i, m in enumerate(modules)}
    assign = snapshot.assign0.copy()
    for mv in solution.moves:
        ci = snapshot.class_index.get(mv.cls)
        if ci is None:
            raise UnknownClass(f"move references unknown class {mv.cls!r}")
        mi = index.get(mv.target)
        if mi is None:
            raise ValidationError(f"move targets unknown module {mv.target!r}")
        assign[ci] = mi
    n = len(modules)
    members = np.bincount(assign, minlength=n).astype(np.int64)
    loc = np.bincount(assign, weights=snapshot.loc_arr, minlength=n).astype(np.int64)
    roc = np.bincount(assign, weights=snapshot.change_counts, minlength=n).astype(np.int64)
    weights = kernels.dependency_matrix(assign, snapshot.dep_src, snapshot.dep_dst, n)
    mods_ct, ccp = kernels.commit_stats(assign, snapshot.commit_ptr, snapshot.commit_cls, n)
    emptied = frozenset(snapshot.modules[i] for i in range(k) if members[i] == 0)
    created = frozenset(modules[i] for i in range(k, n) if members[i] > 0)
    return AdjustedState(
        modules, index, assign, members, loc, roc, mods_ct, weights, int(ccp),
        emptied, created, snapshot.classes,
    )


def detect_new_cycles(graph: ModuleGraph, added=(), removed=()) -> bool:
    """True iff the baseline edge set with ``added``/``removed`` applied has a cycle.

    The baseline is acyclic, so any cycle must use an added edge.
    """
    if not added:
        return False
    removed = set(removed)
    succ = {v: [w for w in ws if (v, w) not in removed] for v, ws in graph.succ.items()}
    for a, b in added:
        succ.setdefault(a, []).append(b)
        succ.setdefault(b, [])
    for a, b in added:
        # does b reach a?
        seen = {b}
        stack = [b]
        while stack:
            v = stack.pop()
            if v == a:
                return True
            for w in succ[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
    return False
