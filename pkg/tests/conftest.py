import json
import random

import pytest

from remod.model import Commit, DependencySnapshot


def t1_snapshot(extra_deps=(), extra_classes=None):
    assignment = {"A": "M1", "B": "M1", "C": "M2", "D": "M3"}
    loc = {"A": 100, "B": 100, "C": 200, "D": 300}
    if extra_classes:
        for cls, (module, size) in extra_classes.items():
            assignment[cls] = module
            loc[cls] = size
    deps = [("A", "B"), ("B", "C"), ("C", "D"), *extra_deps]
    history = [
        Commit("k1", ("A", "B")),
        Commit("k2", ("A", "C", "D")),
        Commit("k3", ("C", "D")),
        Commit("k4", ("C", "D")),
        Commit("k5", ("D",)),
        Commit("k6", ("D",)),
    ]
    return DependencySnapshot(assignment, deps, loc, history)


@pytest.fixture
def t1():
    return t1_snapshot()


@pytest.fixture
def t1e():
    # T1 plus class E in M1 using C and D
    return t1_snapshot(extra_deps=[("E", "C"), ("E", "D")], extra_classes={"E": ("M1", 50)})


T1_DOC = {
    "classes": [
        {"id": "A", "module": "M1", "loc": 100},
        {"id": "B", "module": "M1", "loc": 100},
        {"id": "C", "module": "M2", "loc": 200},
        {"id": "D", "module": "M3", "loc": 300},
    ],
    "dependencies": [["A", "B"], ["B", "C"], ["C", "D"]],
}
T1_HISTORY = [
    {"id": "k1", "classes": ["A", "B"]},
    {"id": "k2", "classes": ["A", "C", "D"]},
    {"id": "k3", "classes": ["C", "D"]},
    {"id": "k4", "classes": ["C", "D"]},
    {"id": "k5", "classes": ["D"]},
    {"id": "k6", "classes": ["D"]},
]


@pytest.fixture
def t1_files(tmp_path):
    snap = tmp_path / "t1.json"
    hist = tmp_path / "h.json"
    model = tmp_path / "e1.json"
    snap.write_text(json.dumps(T1_DOC))
    hist.write_text(json.dumps(T1_HISTORY))
    model.write_text(json.dumps({"a": 1, "b": 1, "c": 0}))
    return snap, hist, model


def random_acyclic_snapshot(rng: random.Random, max_modules=15, max_classes=60, history=True):
    """Random snapshot whose module graph respects a random module order."""
    k = rng.randint(2, max_modules)
    n = rng.randint(max(k, 2), max_classes)
    modules = [f"m{i}" for i in range(k)]
    assignment = {f"c{i}": modules[i] if i < k else rng.choice(modules) for i in range(n)}
    order = {m: i for i, m in enumerate(rng.sample(modules, k))}
    classes = sorted(assignment)
    deps = set()
    for _ in range(rng.randint(0, 3 * n)):
        a, b = rng.sample(classes, 2)
        ma, mb = order[assignment[a]], order[assignment[b]]
        if ma == mb or ma < mb:
            deps.add((a, b))
        else:
            deps.add((b, a))
    loc = {c: rng.randint(1, 2000) for c in classes}
    commits = []
    if history:
        for i in range(rng.randint(0, 30)):
            commits.append(Commit(f"k{i}", tuple(rng.sample(classes, rng.randint(1, min(5, n))))))
    return DependencySnapshot(assignment, sorted(deps), loc, commits)


# -- acceptance reporting --------------------------------------------------------

ACCEPTANCE = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
