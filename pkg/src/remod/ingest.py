"""Loading, serializing and synthesizing dependency snapshots."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    EmptyDataset,
    InvalidSpec,
    ParseError,
    ScrambleFailed,
    ValidationError,
)
from .model import Commit, DependencySnapshot, find_cycle

log = logging.getLogger(__name__)


def read_source(source) -> bytes:
    """Read a path, ``"-"`` (standard input), or pass bytes/str through."""
    if isinstance(source, bytes):
        return source
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        if str(source) == "-":
            return sys.stdin.buffer.read()
        return Path(source).read_bytes()
    return source.encode("utf-8")


def _decode_json(data):
    if isinstance(data, Path):
        data = data.read_bytes()
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"document is not UTF-8: {exc}") from exc
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc


def load_snapshot(data) -> DependencySnapshot:
    doc = _decode_json(data)
    if not isinstance(doc, dict) or not isinstance(doc.get("classes"), list):
        raise ParseError('snapshot document needs a "classes" list')
    deps = doc.get("dependencies", [])
    if not isinstance(deps, list):
        raise ParseError('"dependencies" must be a list')
    assignment, loc = {}, {}
    for i, entry in enumerate(doc["classes"]):
        if not isinstance(entry, dict) or not {"id", "module", "loc"} <= entry.keys():
            raise ParseError(f"classes[{i}] needs id, module and loc")
        cls = entry["id"]
        if cls in assignment:
            raise ValidationError(f"duplicate class id {cls!r}")
        assignment[cls] = entry["module"]
        if not isinstance(entry["loc"], (int, float)):
            raise ParseError(f"classes[{i}].loc is not a number")
        loc[cls] = entry["loc"]
    pairs = []
    for i, pair in enumerate(deps):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ParseError(f"dependencies[{i}] must be a [from, to] pair")
        pairs.append(tuple(pair))
    return DependencySnapshot(assignment, pairs, loc)


def dump_snapshot(snapshot: DependencySnapshot) -> str:
    """Line-oriented JSON: one class or dependency per line."""
    lines = ['{', '  "classes": [']
    rows = [
        "    " + json.dumps({"id": c, "module": snapshot.assignment[c], "loc": snapshot.loc[c]})
        for c in snapshot.classes
    ]
    lines.append(",\n".join(rows))
    lines.append("  ],")
    lines.append('  "dependencies": [')
    lines.append(",\n".join("    " + json.dumps([a, b]) for a, b in snapshot.dependencies))
    lines.append("  ]")
    lines.append("}")
    return "\n".join(line for line in lines if line) + "\n"


class HistoryLoad(NamedTuple):
    commits: list
    unknown: int  # number of dropped references to unknown classes


def load_history(data, snapshot: DependencySnapshot | None = None) -> HistoryLoad:
    doc = _decode_json(data)
    if not isinstance(doc, list):
        raise ParseError("history document must be a list of commits")
    known = snapshot.assignment if snapshot is not None else None
    commits, unknown = [], 0
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict) or "id" not in entry or "classes" not in entry:
            raise ParseError(f"history[{i}] needs id and classes")
        if not isinstance(entry["classes"], list):
            raise ParseError(f"history[{i}].classes must be a list")
        classes = entry["classes"]
        if known is not None:
            kept = [c for c in classes if c in known]
            unknown += len(classes) - len(kept)
            classes = kept
        if classes:
            commits.append(Commit(str(entry["id"]), tuple(classes)))
    if unknown:
        log.warning("history: dropped %d references to unknown classes", unknown)
    return HistoryLoad(commits, unknown)


def dump_history(commits) -> str:
    rows = ["  " + json.dumps({"id": c.id, "classes": list(c.classes)}) for c in commits]
    if not rows:
        return "[]\n"
    return "[\n" + ",\n".join(rows) + "\n]\n"


@dataclass(frozen=True)
class TimingSample:
    loc: int
    seconds: float


class TimingLoad(NamedTuple):
    samples: list
    rejected: list  # (row number, reason)


def load_timings(data) -> TimingLoad:
    """Parse ``loc,seconds`` CSV. The header row is optional."""
    if isinstance(data, Path):
        data = data.read_bytes()
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    rows = [r for r in csv.reader(io.StringIO(data)) if any(cell.strip() for cell in r)]
    if not rows:
        raise EmptyDataset("timings file is empty")
    if [c.strip().lower() for c in rows[0]] == ["loc", "seconds"]:
        start = 1
    else:
        start = 0
    samples, rejected = [], []
    for rownum, row in enumerate(rows[start:], start=start + 1):
        if len(row) != 2:
            raise ParseError(f"row {rownum}: expected 2 columns, got {len(row)}")
        try:
            loc = float(row[0])
            seconds = float(row[1])
        except ValueError as exc:
            raise ParseError(f"row {rownum}: {exc}") from exc
        if not (loc > 0 and seconds > 0 and math.isfinite(seconds)) or loc != int(loc):
            rejected.append((rownum, f"loc={row[0].strip()} seconds={row[1].strip()}"))
            continue
        samples.append(TimingSample(int(loc), seconds))
    if not samples:
        raise EmptyDataset("no valid timing rows")
    return TimingLoad(samples, rejected)


@dataclass(frozen=True)
class PlantedSpec:
    modules: int = 5
    classes: tuple = (10, 10)  # inclusive range of classes per module
    intra: float = 0.4
    inter: float = 0.02
    commits: int = 200
    scramble: float = 0.0
    seed: int = 0
    loc: tuple = (50, 500)

    def validate(self):
        lo, hi = self.classes
        if self.modules < 1 or lo < 1 or hi < lo or self.commits < 0:
            raise InvalidSpec(f"invalid counts in {self}")
        for name in ("intra", "inter", "scramble"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidSpec(f"{name}={p} outside [0, 1]")
        if self.loc[0] < 1 or self.loc[1] < self.loc[0]:
            raise InvalidSpec(f"invalid loc range {self.loc}")


def generate_planted(spec: PlantedSpec) -> DependencySnapshot:
    """Synthesize a codebase whose modules are the planted ground truth.

    Intra-module dependencies point from lower to higher class index and
    inter-module ones from lower to higher module index, so the module graph
    is acyclic by construction. ``spec.scramble`` is not applied here.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    width = len(str(spec.modules - 1))
    members = []
    assignment, loc = {}, {}
    for m in range(spec.modules):
        name = f"M{m:0{width}d}"
        n = int(rng.integers(spec.classes[0], spec.classes[1] + 1))
        cw = len(str(n - 1))
        classes = [f"{name}.C{j:0{cw}d}" for j in range(n)]
        for c in classes:
            assignment[c] = name
            loc[c] = int(rng.integers(spec.loc[0], spec.loc[1] + 1))
        members.append(classes)

    deps = []
    for classes in members:
        for i in range(len(classes)):
            for j in range(i + 1, len(classes)):
                if rng.random() < spec.intra:
                    deps.append((classes[i], classes[j]))
    for a in range(spec.modules):
        for b in range(a + 1, spec.modules):
            for x in members[a]:
                for y in members[b]:
                    if rng.random() < spec.inter:
                        deps.append((x, y))

    all_classes = [c for classes in members for c in classes]
    history = []
    for k in range(spec.commits):
        if rng.random() < 0.9:
            pool = members[int(rng.integers(spec.modules))]
            size = int(rng.integers(1, min(4, len(pool)) + 1))
        else:
            pool = all_classes
            size = int(rng.integers(1, min(3, len(pool)) + 1))
        picked = rng.choice(len(pool), size=size, replace=False)
        history.append(Commit(f"k{k}", tuple(pool[i] for i in sorted(picked.tolist()))))
    return DependencySnapshot(assignment, deps, loc, history)


def _module_edges(snapshot, assignment):
    edges = set()
    for a, b in snapshot.dependencies:
        ma, mb = assignment[a], assignment[b]
        if ma != mb:
            edges.add((ma, mb))
    return edges


def scramble(snapshot: DependencySnapshot, fraction: float, seed: int, retries: int = 200):
    """Reassign ``floor(fraction * n)`` classes to random other modules.

    Classes are visited in random order; each is moved to a uniformly random
    other module among those that keep the module graph acyclic, or skipped
    when no such module exists. An attempt fails if the classes run out
    before the quota is met; after ``retries`` failed attempts ScrambleFailed
    is raised.
    """
    if not 0.0 <= fraction <= 1.0:
        raise InvalidSpec(f"scramble fraction {fraction} outside [0, 1]")
    n = len(snapshot.classes)
    count = math.floor(fraction * n)
    if count == 0:
        return snapshot
    if len(snapshot.modules) < 2:
        raise ScrambleFailed("cannot scramble a single-module snapshot")
    rng = np.random.default_rng(seed)
    for _ in range(retries):
        assignment = dict(snapshot.assignment)
        moved = 0
        for i in rng.permutation(n).tolist():
            cls = snapshot.classes[i]
            home = snapshot.assignment[cls]
            others = [m for m in snapshot.modules if m != home]
            for t in rng.permutation(len(others)).tolist():
                assignment[cls] = others[t]
                if find_cycle(_module_edges(snapshot, assignment), snapshot.modules) is None:
                    moved += 1
                    break
            else:
                assignment[cls] = home
            if moved == count:
                return snapshot.with_assignment(assignment)
    raise ScrambleFailed(f"no acyclic reassignment of {count} classes after {retries} attempts")

