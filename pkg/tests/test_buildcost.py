import math
import random

import numpy as np
import pytest
from scipy.optimize import curve_fit

from conftest import random_acyclic_snapshot
from oracles import ebccb_full
from remod.buildcost import (
    BuildCostModel,
    EdgeDelta,
    ReverseReachability,
    TransDelta,
    calc_ebccb,
    calculate_ebccb_diff,
    fit_build_cost_model,
    get_changed_edges,
    get_changed_trans_deps,
    loc_to_cost,
    recursive_edge_check,
    trans_delta_oracle,
)
from remod.errors import InsufficientData, ParseError
from remod.ingest import TimingSample
from remod.model import EMPTY, Move, New, apply_solution, normalize_solution

E1 = BuildCostModel(1, 1, 0)


def sol(snapshot, *pairs):
    return normalize_solution([Move(c, t) for c, t in pairs], snapshot)


def samples(xs, f):
    return [TimingSample(int(x), float(f(x))) for x in xs]


class TestFit:
    def test_exact_recovery(self):
        f = lambda x: 2 * math.log10(x) ** 1.5 + 0.3  # noqa: E731
        m = fit_build_cost_model(samples([10, 100, 1000, 10000], f))
        assert (m.a, m.b, m.c) == pytest.approx((2, 1.5, 0.3), rel=1e-6)

    def test_constant_data(self):
        xs = [10, 100, 1000]
        m = fit_build_cost_model(samples(xs, lambda x: 5.0))
        rel = [abs(m.cost(x) - 5.0) / 5.0 for x in xs]
        assert max(rel) < 1e-6

    def test_too_few(self):
        with pytest.raises(InsufficientData):
            fit_build_cost_model(samples([10, 100], lambda x: 1.0))

    def test_too_few_distinct(self):
        with pytest.raises(InsufficientData):
            fit_build_cost_model(samples([10, 10, 100], lambda x: 1.0))

    def test_matches_scipy_on_noisy_data(self):
        rng = np.random.default_rng(4)
        xs = np.geomspace(50, 2e5, 40).astype(int)
        t = (1.2 * np.log10(xs) ** 2.1 + 4.0) * rng.lognormal(0, 0.08, len(xs))
        m = fit_build_cost_model([TimingSample(int(x), float(y)) for x, y in zip(xs, t)])

        def f(x, a, b, c):
            return a * np.log10(x) ** b + c

        ref, _ = curve_fit(f, xs.astype(float), t, p0=(1, 1, 0), sigma=t, maxfev=20000)

        def loss(p):
            return float(np.sum(((f(xs, *p) - t) / t) ** 2))

        assert loss((m.a, m.b, m.c)) <= loss(ref) * (1 + 1e-6)
        assert (m.a, m.b, m.c) == pytest.approx(tuple(ref), rel=1e-3)

    def test_json_round_trip(self):
        m = BuildCostModel(1.5, 0.7, -2.0)
        assert BuildCostModel.from_json(m.to_json()) == m

    @pytest.mark.parametrize("doc", ['{"a": 1}', "nope", '{"a": 1, "b": 1, "c": "x"}'])
    def test_bad_json(self, doc):
        with pytest.raises(ParseError):
            BuildCostModel.from_json(doc)


class TestLocToCost:
    def test_values(self):
        assert loc_to_cost(E1, 10) == pytest.approx(1.0)
        assert loc_to_cost(BuildCostModel(2, 2, 3), 100) == pytest.approx(11.0)
        assert loc_to_cost(BuildCostModel(5, 3, 7), 0) == 0.0

    def test_monotone(self):
        rng = random.Random(0)
        for _ in range(200):
            m = BuildCostModel(rng.uniform(0.01, 5), rng.uniform(0.01, 3), rng.uniform(-5, 5))
            xs = sorted(rng.randint(10, 10**6) for _ in range(20))
            costs = [m.cost(x) for x in xs]
            assert costs == sorted(costs)


class TestChangedEdges:
    def test_d_to_m2(self, t1):
        d = get_changed_edges(t1.graph, t1, sol(t1, ("D", "M2")))
        assert d.removed == {("M2", "M3")} and d.added == frozenset()

    def test_c_to_m1(self, t1):
        d = get_changed_edges(t1.graph, t1, sol(t1, ("C", "M1")))
        assert d.removed == {("M1", "M2"), ("M2", "M3")}
        assert d.added == {("M1", "M3")}

    def test_b_to_m2_nets_zero(self, t1):
        d = get_changed_edges(t1.graph, t1, sol(t1, ("B", "M2")))
        assert d.added == d.removed == frozenset()
        assert d.changes[("M1", "M2")] == 0

    def test_against_full_recompute(self):
        rng = random.Random(8)
        for _ in range(300):
            s = random_acyclic_snapshot(rng, 8, 30, history=False)
            moves = [(c, rng.choice(list(s.modules) + [New(0), New(1)]))
                     for c in rng.sample(s.classes, rng.randint(1, min(6, len(s.classes))))]
            x = sol(s, *moves)
            d = get_changed_edges(s.graph, s, x)
            after = apply_solution(s, x).edges()
            assert d.added == {e for e in after if e not in s.graph.edges}
            assert d.removed == {e for e in s.graph.edges if e not in after}


class TestReverseReachability:
    def _run(self, g, v, removed=frozenset(), added=frozenset()):
        state = ReverseReachability.for_delta(g, added)
        return recursive_edge_check(v, g, removed, added, state)

    def test_intact_chain(self, t1):
        vres, circ = self._run(t1.graph, "M3")
        assert vres["M2"] and vres["M1"] and not circ

    def test_severed_chain(self, t1):
        vres, _ = self._run(t1.graph, "M3", removed={("M2", "M3")})
        assert vres["M2"] is False and vres["M1"] is False

    def test_no_reverse_edges(self, t1):
        vres, circ = self._run(t1.graph, "M1")
        assert vres == {"M1": True} and circ is False


class TestTransDeps:
    def _delta(self, s, x):
        return get_changed_trans_deps(s.graph, get_changed_edges(s.graph, s, x), s.graph.tdeps)

    def test_c_to_m1(self, t1):
        td = self._delta(t1, sol(t1, ("C", "M1")))
        assert td == TransDelta(frozenset(), frozenset({("M1", "M2"), ("M2", "M3")}))

    def test_d_to_m2(self, t1):
        td = self._delta(t1, sol(t1, ("D", "M2")))
        assert td.removed == {("M1", "M3"), ("M2", "M3")} and td.added == frozenset()

    def test_empty_delta(self, t1):
        assert get_changed_trans_deps(t1.graph, EdgeDelta(frozenset(), frozenset(), {})) == TransDelta()

    def test_oracle_examples(self, t1):
        assert trans_delta_oracle(t1.graph, t1, sol(t1, ("C", "M1"))).removed == {("M1", "M2"), ("M2", "M3")}
        assert trans_delta_oracle(t1.graph, t1, sol(t1, ("D", "M2"))).removed == {("M1", "M3"), ("M2", "M3")}
        assert trans_delta_oracle(t1.graph, t1, EMPTY) == TransDelta()

    def test_cyclic_result_matches_oracle(self, t1):
        x = sol(t1, ("A", "M2"))
        assert self._delta(t1, x) == trans_delta_oracle(t1.graph, t1, x)


class TestEBCCB:
    def test_calc_zero(self, t1):
        assert calc_ebccb(TransDelta(), apply_solution(t1, EMPTY), E1) == 0.0

    def test_calc_single_pair(self, t1):
        td = TransDelta(frozenset({("M1", "M3")}), frozenset())
        # baseline state: ROC[M3]=5, ModsCT[M1][M3]=1, LOC[M3]=300
        got = calc_ebccb(td, apply_solution(t1, EMPTY), E1)
        assert got == pytest.approx(math.log10(300) * 4, abs=1e-4)
        assert got == pytest.approx(9.9085, abs=1e-4)

    def test_hand_value(self, t1):
        x = sol(t1, ("C", "M1"))
        assert calculate_ebccb_diff(t1.graph, t1, x, t1.graph.tdeps, E1) == pytest.approx(-12.3856, abs=1e-4)

    def test_b_to_m2_zero(self, t1):
        assert calculate_ebccb_diff(t1.graph, t1, sol(t1, ("B", "M2")), t1.graph.tdeps, E1) == 0.0

    def test_empty_zero(self, t1):
        assert calculate_ebccb_diff(t1.graph, t1, EMPTY, t1.graph.tdeps, E1) == 0.0

    def test_antisymmetry(self):
        rng = random.Random(6)
        for _ in range(100):
            s = random_acyclic_snapshot(rng, 8, 30)
            x = sol(s, *[(c, rng.choice(s.modules)) for c in rng.sample(s.classes, min(3, len(s.classes)))])
            st_ = apply_solution(s, x)
            td = trans_delta_oracle(s.graph, s, x, st_)
            flipped = TransDelta(td.removed, td.added)
            assert calc_ebccb(flipped, st_, E1) == pytest.approx(-calc_ebccb(td, st_, E1))

    def test_against_first_principles(self):
        rng = random.Random(12)
        model = BuildCostModel(1.7, 1.2, 0.4)
        for _ in range(300):
            s = random_acyclic_snapshot(rng, 10, 40)
            moves = [(c, rng.choice(list(s.modules) + [New(0), New(1)]))
                     for c in rng.sample(s.classes, rng.randint(1, min(6, len(s.classes))))]
            x = sol(s, *moves)
            got = calculate_ebccb_diff(s.graph, s, x, s.graph.tdeps, model)
            want = ebccb_full(s.assignment, s.dependencies, s.loc, [k.classes for k in s.history],
                              [(m.cls, m.target) for m in x.moves], model.a, model.b, model.c)
            assert got == pytest.approx(want, rel=1e-9, abs=1e-9)

    def test_deterministic(self):
        rng = random.Random(13)
        s = random_acyclic_snapshot(rng, 10, 40)
        x = sol(s, *[(c, New(0)) for c in s.classes[:4]])
        a = calculate_ebccb_diff(s.graph, s, x, s.graph.tdeps, E1)
        b = calculate_ebccb_diff(s.graph, s, x, s.graph.tdeps, E1)
        assert a == b
