import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_acyclic_snapshot, t1_snapshot
from oracles import effective_assignment, floyd_warshall_closure, is_acyclic, module_edges
from remod.errors import CyclicModuleGraph, UnknownClass, ValidationError
from remod.model import (
    EMPTY,
    Commit,
    DependencySnapshot,
    Move,
    New,
    Solution,
    apply_solution,
    compute_transitive_deps,
    derive_module_graph,
    detect_new_cycles,
    normalize_solution,
)
from remod.buildcost import get_changed_edges


def sol(snapshot, *pairs):
    return normalize_solution([Move(c, t) for c, t in pairs], snapshot)


class TestModuleGraph:
    def test_t1_edges_and_tdeps(self, t1):
        g = derive_module_graph(t1)
        assert g.edges == {("M1", "M2"): 1, ("M2", "M3"): 1}
        assert g.tdeps["M1"] == {"M2", "M3"}
        assert g.tdeps["M2"] == {"M3"}
        assert g.tdeps["M3"] == set()

    def test_single_module_has_no_edges(self):
        s = DependencySnapshot({"A": "M", "B": "M"}, [("A", "B")], {"A": 1, "B": 1})
        assert s.graph.edges == {}
        assert all(not v for v in s.graph.tdeps.values())

    def test_cycle_rejected_with_path(self):
        with pytest.raises(CyclicModuleGraph) as info:
            t1_snapshot(extra_deps=[("D", "A")])
        cycle = info.value.cycle
        assert set(cycle) == {"M1", "M2", "M3"}
        assert cycle[0] == cycle[-1]


class TestTransitiveDeps:
    def test_t1(self, t1):
        td = compute_transitive_deps(t1.graph.edges, t1.graph.vertices)
        assert td["M1"] == {"M2", "M3"}

    def test_empty(self):
        assert compute_transitive_deps({}, ["X", "Y"]) == {"X": set(), "Y": set()}

    def test_two_cycle(self):
        td = compute_transitive_deps({("X", "Y"), ("Y", "X")})
        assert td == {"X": {"X", "Y"}, "Y": {"X", "Y"}}

    def test_against_floyd_warshall(self):
        rng = random.Random(7)
        for _ in range(1000):
            n = rng.randint(1, 12)
            vs = [f"v{i}" for i in range(n)]
            edges = {(rng.choice(vs), rng.choice(vs)) for _ in range(rng.randint(0, 2 * n))}
            edges = {e for e in edges if e[0] != e[1]}
            got = compute_transitive_deps(edges, vs)
            want = floyd_warshall_closure(vs, edges)
            assert {v: set(s) for v, s in got.items()} == want


class TestApplySolution:
    def test_d_to_m2(self, t1):
        st_ = apply_solution(t1, sol(t1, ("D", "M2")))
        assert st_.loc_of("M2") == 500
        assert st_.roc_of("M2") == 8
        assert st_.emptied == {"M3"}
        assert st_.mods_ct_of("M1", "M2") == 1
        assert st_.loc_of("M3") == 0 and st_.roc_of("M3") == 0

    def test_empty_is_baseline(self, t1):
        st_ = apply_solution(t1, EMPTY)
        assert [st_.loc_of(m) for m in ("M1", "M2", "M3")] == [200, 200, 300]
        assert [st_.roc_of(m) for m in ("M1", "M2", "M3")] == [3, 3, 5]
        assert st_.mods_ct_of("M1", "M2") == 1
        assert st_.mods_ct_of("M1", "M3") == 1
        assert st_.mods_ct_of("M2", "M3") == 3
        assert st_.emptied == frozenset() and st_.created == frozenset()
        assert st_.edges() == t1.graph.edges

    def test_c_to_m1(self, t1):
        st_ = apply_solution(t1, sol(t1, ("C", "M1")))
        assert st_.loc_of("M1") == 400
        assert st_.roc_of("M1") == 6
        assert st_.emptied == {"M2"}
        assert st_.mods_ct_of("M1", "M3") == 3

    def test_new_module_created(self, t1):
        st_ = apply_solution(t1, sol(t1, ("A", New(4))))
        assert st_.created == {New(0)}
        assert st_.loc_of(New(0)) == 100

    def test_unknown_class(self, t1):
        with pytest.raises(UnknownClass):
            apply_solution(t1, Solution((Move("Z", "M1"),)))

    def test_unknown_target(self, t1):
        with pytest.raises(ValidationError):
            apply_solution(t1, Solution((Move("A", "M9"),)))

    def test_loc_conserved_and_roc_sums(self):
        rng = random.Random(3)
        for _ in range(200):
            s = random_acyclic_snapshot(rng, 6, 20)
            moves = [(c, rng.choice(list(s.modules) + [New(rng.randint(0, 2))]))
                     for c in rng.sample(s.classes, rng.randint(0, min(5, len(s.classes))))]
            solution = sol(s, *moves)
            st_ = apply_solution(s, solution)
            assert int(st_.loc.sum()) == sum(s.loc.values())
            eff = st_.effective_assignment()
            for m in st_.modules:
                members = [c for c in s.classes if eff[c] == m]
                counts = sum(c in k.classes for k in s.history for c in members)
                assert st_.roc_of(m) == counts


class TestNormalize:
    def test_last_write_wins(self, t1):
        assert sol(t1, ("A", "M2"), ("A", "M3")).moves == (Move("A", "M3"),)

    def test_noop_dropped(self, t1):
        assert sol(t1, ("B", "M1")).moves == ()

    def test_new_tags_renumbered(self, t1):
        assert sol(t1, ("D", New(7)), ("A", New(7))).moves == (Move("A", New(0)), Move("D", New(0)))

    @given(st.lists(st.tuples(st.sampled_from("ABCD"),
                              st.one_of(st.sampled_from(["M1", "M2", "M3"]),
                                        st.integers(0, 5).map(New))), max_size=8))
    @settings(max_examples=200, deadline=None)
    def test_idempotent(self, raw):
        t1 = t1_snapshot()
        once = normalize_solution([Move(c, t) for c, t in raw], t1)
        assert normalize_solution(once.moves, t1) == once
        assert [m.cls for m in once.moves] == sorted({m.cls for m in once.moves})


class TestDetectNewCycles:
    def _check(self, s, solution):
        d = get_changed_edges(s.graph, s, solution)
        return detect_new_cycles(s.graph, d.added, d.removed)

    def test_a_to_m2_cycles(self, t1):
        assert self._check(t1, sol(t1, ("A", "M2")))

    def test_empty_delta(self, t1):
        assert not detect_new_cycles(t1.graph, (), ())

    def test_d_to_m2_acyclic(self, t1):
        assert not self._check(t1, sol(t1, ("D", "M2")))

    def test_against_topological_sort(self):
        rng = random.Random(11)
        for _ in range(500):
            s = random_acyclic_snapshot(rng, 6, 15, history=False)
            moves = [(c, rng.choice(list(s.modules) + [New(0)]))
                     for c in rng.sample(s.classes, rng.randint(1, min(4, len(s.classes))))]
            solution = sol(s, *moves)
            eff = effective_assignment(s.assignment, [(m.cls, m.target) for m in solution.moves])
            verts = set(eff.values()) | set(s.modules)
            want = not is_acyclic(verts, module_edges(eff, s.dependencies))
            assert self._check(s, solution) == want


class TestSnapshotValidation:
    def test_self_dependency(self):
        with pytest.raises(ValidationError):
            DependencySnapshot({"A": "M"}, [("A", "A")], {"A": 1})

    def test_unknown_endpoint(self):
        with pytest.raises(ValidationError):
            DependencySnapshot({"A": "M"}, [("A", "Z")], {"A": 1})

    def test_nonpositive_loc(self):
        with pytest.raises(ValidationError):
            DependencySnapshot({"A": "M"}, [], {"A": 0})

    def test_empty_commit(self):
        with pytest.raises(ValidationError):
            Commit("k", ())

    def test_change_counts(self, t1):
        counts = dict(zip(t1.classes, t1.change_counts.tolist()))
        assert counts == {"A": 2, "B": 1, "C": 3, "D": 5}
