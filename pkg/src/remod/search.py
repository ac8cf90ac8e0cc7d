"""NSGA-II over variable-length sets of move-class operations.

Customizations: random move-set initialization, a crossover that keeps all
moves of one source module together, min-cut and neighborhood mutations,
duplicate deletion, an elite archive that joins the mating pool, and removal
of solutions with module cycles from the final front only.
"""
from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .buildcost import BuildCostModel, get_changed_edges
from .errors import BudgetZero, ParseError
from .metrics import PRESETS, Evaluator, ObjectiveVector
from .mincut import stoer_wagner_min_cut
from .model import (
    DependencySnapshot,
    ModuleGraph,
    Move,
    New,
    Solution,
    detect_new_cycles,
    module_key,
    normalize_solution,
)

_INIT, _SELECT, _VARY = 0, 1, 2


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Independent stream for ``(seed, *path)``; unaffected by scheduling."""
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, *path])


def _pick(rng, items):
    return items[int(rng.integers(len(items)))]


@dataclass
class SearchConfig:
    population: int = 500
    generations: int | None = 100
    time_budget: float | None = None
    p_mutation: float = 0.5
    p_crossover: float = 1.0
    min_cut_share: float = 0.5  # probability the min-cut operator is the one applied
    init_moves: tuple = (1, 100)
    min_cut_depth: int = 3
    neighborhood_c: float = 0.5
    archive: bool = True
    objectives: tuple = PRESETS["cfg1"]
    seed: int = 0
    workers: int = 1

    def validate(self):
        if self.population < 4 or self.population % 2:
            raise ValueError("population must be even and at least 4")
        for name in ("p_mutation", "p_crossover", "min_cut_share"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        lo, hi = self.init_moves
        if lo < 1 or hi < lo:
            raise ValueError(f"invalid initial move range {self.init_moves}")
        if self.min_cut_depth < 1:
            raise ValueError("min-cut depth must be at least 1")
        if not 0.0 <= self.neighborhood_c < 1.0:
            raise ValueError("neighborhood constant must lie in [0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.generations is None and self.time_budget is None:
            raise BudgetZero("no generation or time budget given")
        if (self.generations is not None and self.generations < 0) or (
            self.time_budget is not None and self.time_budget <= 0
        ):
            raise BudgetZero("budget allows no search")


@dataclass
class Individual:
    solution: Solution
    objectives: ObjectiveVector
    values: tuple
    rank: int = 0
    crowding: float = 0.0


# -- variation operators -------------------------------------------------------


def _effective(snapshot, targets, cls):
    return targets.get(cls, snapshot.assignment[cls])


def _fresh_tag(solution: Solution) -> int:
    tags = solution.new_tags()
    return tags[-1] + 1 if tags else 0


def target_candidates(snapshot: DependencySnapshot, classes, solution: Solution | None = None) -> list:
    """Destination modules for moving ``classes`` together.

    Modules holding a dependency partner of any class in the set, minus the
    current module of the first class, plus one fresh new module. Falls back
    to every other existing module when no partner lies elsewhere. Module
    locations follow ``solution`` when given, so modules it created count.
    """
    classes = list(classes)
    solution = solution or Solution()
    targets = solution.targets()
    inside = set(classes)
    current = _effective(snapshot, targets, classes[0])
    found = set()
    for c in classes:
        for nb in snapshot.neighbors(c):
            if nb not in inside:
                found.add(_effective(snapshot, targets, nb))
    found.discard(current)
    if not found:
        found = {m for m in snapshot.modules if m != current}
    return sorted(found, key=module_key) + [New(_fresh_tag(solution))]


def _move_group(solution, snapshot, group, target):
    moves = list(solution.moves) + [Move(c, target) for c in group]
    return normalize_solution(moves, snapshot)


def forward_dependency_graph(snapshot: DependencySnapshot, seed_cls: str, depth: int) -> dict:
    """Undirected weighted graph of ``seed_cls`` and its dependencies up to ``depth`` hops."""
    nodes = {seed_cls}
    frontier = [seed_cls]
    for _ in range(depth):
        nxt = []
        for c in frontier:
            for d in snapshot.out_deps[c]:
                if d not in nodes:
                    nodes.add(d)
                    nxt.append(d)
        frontier = nxt
    adj = {c: {} for c in nodes}
    for c in nodes:
        for d in snapshot.out_deps[c]:
            if d in nodes:
                adj[c][d] = adj[c].get(d, 0) + 1
                adj[d][c] = adj[d].get(c, 0) + 1
    return adj


def mutate_min_cut(solution: Solution, snapshot: DependencySnapshot, depth: int, rng) -> Solution:
    seed_cls = _pick(rng, snapshot.classes)
    adj = forward_dependency_graph(snapshot, seed_cls, depth)
    if len(adj) == 1:
        group = [seed_cls]
    else:
        _, side = stoer_wagner_min_cut(adj)
        if seed_cls not in side:
            side = set(adj) - side
        group = [seed_cls] + sorted(side - {seed_cls})
    target = _pick(rng, target_candidates(snapshot, group, solution))
    return _move_group(solution, snapshot, group, target)


def mutate_neighborhood(solution: Solution, snapshot: DependencySnapshot, c: float, rng) -> Solution:
    """Grow a set of connected same-module classes while ``r <= c**n``, then move it."""
    targets = solution.targets()
    seed_cls = _pick(rng, snapshot.classes)
    module = _effective(snapshot, targets, seed_cls)
    group = [seed_cls]
    members = {seed_cls}
    while True:
        r = rng.random()
        if r > c ** len(group):
            break
        hood = sorted({
            nb
            for m in group
            for nb in snapshot.neighbors(m)
            if nb not in members and _effective(snapshot, targets, nb) == module
        })
        if not hood:
            break
        pick = _pick(rng, hood)
        group.append(pick)
        members.add(pick)
    target = _pick(rng, target_candidates(snapshot, group, solution))
    return _move_group(solution, snapshot, group, target)


def crossover_building_blocks(p1: Solution, p2: Solution, snapshot: DependencySnapshot, rng):
    """Swap whole per-source-module groups of moves between two parents.

    New-module tags from the second parent are shifted past the first
    parent's so unrelated new modules never merge.
    """
    offset = _fresh_tag(p1)

    def shifted(mv):
        if isinstance(mv.target, New):
            return Move(mv.cls, New(mv.target.tag + offset))
        return mv

    groups1, groups2 = {}, {}
    for mv in p1.moves:
        groups1.setdefault(snapshot.assignment[mv.cls], []).append(mv)
    for mv in p2.moves:
        groups2.setdefault(snapshot.assignment[mv.cls], []).append(shifted(mv))
    child1, child2 = [], []
    for module in sorted(set(groups1) | set(groups2)):
        g1, g2 = groups1.get(module, []), groups2.get(module, [])
        if rng.random() < 0.5:
            child1 += g1
            child2 += g2
        else:
            child1 += g2
            child2 += g1
    return normalize_solution(child1, snapshot), normalize_solution(child2, snapshot)


def random_solution(snapshot: DependencySnapshot, init_moves, rng) -> Solution:
    """``k`` moves of distinct random classes, so the result has exactly ``k`` moves."""
    lo, hi = init_moves
    k = int(rng.integers(lo, hi + 1))
    solution = Solution()
    for i in rng.choice(len(snapshot.classes), size=k, replace=False).tolist():
        cls = snapshot.classes[i]
        target = _pick(rng, target_candidates(snapshot, [cls], solution))
        solution = _move_group(solution, snapshot, [cls], target)
    return solution


# -- NSGA-II machinery -----------------------------------------------------------


def dominates(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def fast_nondominated_sort(vectors) -> list:
    """Fronts of indices: front 0 is non-dominated, each next front after removing the previous."""
    if len(vectors) == 0:
        return []
    ranks = kernels.nondominated_ranks(np.asarray(vectors, dtype=np.float64))
    fronts = [[] for _ in range(int(ranks.max()) + 1)]
    for i, r in enumerate(ranks.tolist()):
        fronts[r].append(i)
    return fronts


def crowding_distance(vectors) -> list:
    f = np.asarray(vectors, dtype=np.float64)
    n = len(f)
    if n == 0:
        return []
    dist = np.zeros(n)
    if n <= 2:
        return [math.inf] * n
    for k in range(f.shape[1]):
        order = np.argsort(f[:, k], kind="stable")
        col = f[order, k]
        span = col[-1] - col[0]
        dist[order[0]] = math.inf
        dist[order[-1]] = math.inf
        if span > 0:
            dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist.tolist()


def assign_rank_and_crowding(individuals) -> None:
    fronts = fast_nondominated_sort([ind.values for ind in individuals])
    for rank, front in enumerate(fronts):
        cd = crowding_distance([individuals[i].values for i in front])
        for i, d in zip(front, cd):
            individuals[i].rank = rank
            individuals[i].crowding = d


def tournament_select(population, rng) -> Individual:
    if len(population) == 1:
        return population[0]
    i, j = rng.choice(len(population), size=2, replace=False).tolist()
    a, b = population[i], population[j]
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    if a.crowding != b.crowding:
        return a if a.crowding > b.crowding else b
    return a if rng.random() < 0.5 else b


def dedupe_population(individuals) -> list:
    seen, out = set(), []
    for ind in individuals:
        if ind.solution not in seen:
            seen.add(ind.solution)
            out.append(ind)
    return out


def has_module_cycle(graph: ModuleGraph, snapshot: DependencySnapshot, solution: Solution) -> bool:
    delta = get_changed_edges(graph, snapshot, solution)
    return detect_new_cycles(graph, delta.added, delta.removed)


def filter_circular(individuals, graph: ModuleGraph, snapshot: DependencySnapshot) -> list:
    return [ind for ind in individuals if not has_module_cycle(graph, snapshot, ind.solution)]


def survive(pool, size) -> list:
    """Best ``size`` individuals by rank, then by descending crowding distance."""
    fronts = fast_nondominated_sort([ind.values for ind in pool])
    chosen = []
    for rank, front in enumerate(fronts):
        cd = crowding_distance([pool[i].values for i in front])
        members = []
        for i, d in zip(front, cd):
            pool[i].rank, pool[i].crowding = rank, d
            members.append(pool[i])
        if len(chosen) + len(members) <= size:
            chosen += members
        else:
            members.sort(key=lambda ind: -ind.crowding)
            chosen += members[: size - len(chosen)]
        if len(chosen) >= size:
            break
    return chosen


def update_elite_archive(archive, individuals, capacity: int) -> list:
    """Keep mutually non-dominated, distinct solutions; trim by crowding."""
    archive = list(archive)
    present = {a.solution for a in archive}
    for ind in individuals:
        if ind.solution in present:
            continue
        if any(dominates(a.values, ind.values) for a in archive):
            continue
        kept = [a for a in archive if not dominates(ind.values, a.values)]
        if len(kept) != len(archive):
            present = {a.solution for a in kept}
        archive = kept
        archive.append(ind)
        present.add(ind.solution)
    while len(archive) > capacity:
        cd = crowding_distance([a.values for a in archive])
        drop = min(range(len(archive)), key=lambda i: (cd[i], -i))
        archive.pop(drop)
    return archive


# -- evaluation workers ----------------------------------------------------------


class _Context:
    """Everything a worker needs to create and score offspring."""

    def __init__(self, snapshot, model, config):
        self.snapshot = snapshot
        self.config = config
        self.evaluator = Evaluator(snapshot, model, config.objectives)
        self.cache = {}

    def evaluate(self, solution):
        vec = self.cache.get(solution)
        if vec is None:
            if len(self.cache) > 200_000:
                self.cache.clear()
            vec = self.evaluator(solution)
            self.cache[solution] = vec
        return vec

    def initial(self, index):
        cfg = self.config
        rng = derive_rng(cfg.seed, _INIT, index)
        hi = min(cfg.init_moves[1], len(self.snapshot.classes))
        lo = min(cfg.init_moves[0], hi)
        sol = random_solution(self.snapshot, (lo, hi), rng)
        return [(sol, self.evaluate(sol))]

    def vary(self, generation, index, p1, p2):
        cfg = self.config
        snap = self.snapshot
        rng = derive_rng(cfg.seed, _VARY, generation, index)
        if rng.random() < cfg.p_crossover:
            children = crossover_building_blocks(p1, p2, snap, rng)
        else:
            children = (p1, p2)
        out = []
        for child in children:
            if rng.random() < cfg.p_mutation:
                if rng.random() < cfg.min_cut_share:
                    child = mutate_min_cut(child, snap, cfg.min_cut_depth, rng)
                else:
                    child = mutate_neighborhood(child, snap, cfg.neighborhood_c, rng)
            out.append((child, self.evaluate(child)))
        return out


def initialize_population(config: SearchConfig, snapshot: DependencySnapshot,
                          model: BuildCostModel) -> list:
    """The N evaluated starting individuals, before duplicate deletion."""
    ctx = _Context(snapshot, model, config)
    return [
        Individual(sol, vec, vec.values(config.objectives))
        for i in range(config.population)
        for sol, vec in ctx.initial(i)
    ]


_WORKER = None


def _init_worker(snapshot, model, config):
    global _WORKER
    _WORKER = _Context(snapshot, model, config)


def _run_task(task):
    kind, args = task
    if kind == "init":
        return _WORKER.initial(*args)
    return _WORKER.vary(*args)


class _Runner:
    def __init__(self, snapshot, model, config):
        self.workers = config.workers
        self.local = _Context(snapshot, model, config)
        self.executor = None
        if self.workers > 1:
            self.executor = ProcessPoolExecutor(
                max_workers=self.workers,
                initializer=_init_worker,
                initargs=(snapshot, model, config),
            )

    def run(self, tasks):
        if self.executor is None:
            results = [
                self.local.initial(*args) if kind == "init" else self.local.vary(*args)
                for kind, args in tasks
            ]
        else:
            chunk = max(1, len(tasks) // (4 * self.workers))
            results = list(self.executor.map(_run_task, tasks, chunksize=chunk))
        return [pair for res in results for pair in res]

    def close(self):
        if self.executor is not None:
            self.executor.shutdown()


# -- main loop -------------------------------------------------------------------


@dataclass
class SearchResult:
    front: list
    log: list
    generations: int
    archive: list = field(default_factory=list)
    population: list = field(default_factory=list)


def _log_record(generation, population, archive, objectives, pool_size):
    members = population + archive
    best = {o: min(ind.objectives.get(o) for ind in members) for o in objectives}
    return {
        "generation": generation,
        "best": {o: (float(v) if o == "ebccb" or o == "intra_md" else int(v)) for o, v in best.items()},
        "front_size": sum(1 for ind in population if ind.rank == 0),
        "archive_size": len(archive),
        "pool_size": pool_size,
    }


def evolve(config: SearchConfig, snapshot: DependencySnapshot, model: BuildCostModel,
           on_generation=None) -> SearchResult:
    """Run the search; the result is a pure function of the inputs and seed
    (unless a wall-clock budget cuts it short)."""
    config.validate()
    n = config.population
    objectives = config.objectives
    runner = _Runner(snapshot, model, config)
    start = time.monotonic()

    def wrap(pairs):
        return [Individual(s, v, v.values(objectives)) for s, v in pairs]

    try:
        population = dedupe_population(wrap(runner.run([("init", (i,)) for i in range(n)])))
        assign_rank_and_crowding(population)
        archive = update_elite_archive([], population, n) if config.archive else []
        log = [_log_record(0, population, archive, objectives, len(population))]
        if on_generation:
            on_generation(log[-1])
        generation = 0
        while True:
            if config.generations is not None and generation >= config.generations:
                break
            if config.time_budget is not None and time.monotonic() - start >= config.time_budget:
                break
            generation += 1
            mating = dedupe_population(population + archive)
            assign_rank_and_crowding(mating)
            rng = derive_rng(config.seed, _SELECT, generation)
            tasks = []
            for j in range(n // 2):
                a = tournament_select(mating, rng)
                b = tournament_select(mating, rng)
                tasks.append(("vary", (generation, j, a.solution, b.solution)))
            offspring = wrap(runner.run(tasks))
            pool = dedupe_population(population + offspring)
            population = survive(pool, n)
            if config.archive:
                archive = update_elite_archive(archive, offspring, n)
            log.append(_log_record(generation, population, archive, objectives, len(pool)))
            if on_generation:
                on_generation(log[-1])
    finally:
        runner.close()

    candidates = dedupe_population(population + archive)
    valid = filter_circular(candidates, snapshot.graph, snapshot)
    front = []
    if valid:
        fronts = fast_nondominated_sort([ind.values for ind in valid])
        front = [replace(valid[i], rank=0) for i in fronts[0]]
        cd = crowding_distance([ind.values for ind in front])
        for ind, d in zip(front, cd):
            ind.crowding = d
        front.sort(key=lambda ind: (ind.values, str(ind.solution)))
    return SearchResult(front, log, generation, archive, population)


def default_workers() -> int:
    return os.cpu_count() or 1


# -- serialization ---------------------------------------------------------------


def _move_doc(mv: Move) -> dict:
    if isinstance(mv.target, New):
        return {"class": mv.cls, "new_module": mv.target.tag}
    return {"class": mv.cls, "module": mv.target}


def solution_id(index: int) -> str:
    return f"S{index:04d}"


def dump_front(front) -> str:
    doc = {
        "solutions": [
            {
                "id": solution_id(i),
                "moves": [_move_doc(mv) for mv in ind.solution.moves],
                "objectives": ind.objectives.as_dict(),
            }
            for i, ind in enumerate(front)
        ]
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def parse_solution_doc(moves, snapshot: DependencySnapshot) -> Solution:
    """Build a solution from a list of ``{"class", "module"|"new_module"}`` records."""
    raw = []
    for i, m in enumerate(moves):
        if not isinstance(m, dict) or "class" not in m:
            raise ParseError(f"moves[{i}] needs a class")
        if "new_module" in m:
            tag = m["new_module"]
            if not isinstance(tag, int) or tag < 0:
                raise ParseError(f"moves[{i}].new_module must be a non-negative integer")
            raw.append(Move(m["class"], New(tag)))
        elif isinstance(m.get("module"), str):
            raw.append(Move(m["class"], m["module"]))
        else:
            raise ParseError(f"moves[{i}] needs module or new_module")
    return normalize_solution(raw, snapshot)


def load_front(data, snapshot: DependencySnapshot) -> list:
    """Parse a front document into ``(id, Solution)`` pairs."""
    try:
        doc = json.loads(data)
        entries = doc["solutions"]
        return [(str(e["id"]), parse_solution_doc(e["moves"], snapshot)) for e in entries]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"malformed front document: {exc}") from exc


def dump_log(log) -> str:
    return "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in log)
