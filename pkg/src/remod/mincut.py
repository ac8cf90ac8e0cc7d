"""Stoer-Wagner global minimum cut of an undirected weighted graph."""
from __future__ import annotations

import math

from .errors import Disconnected


def _components(adj):
    seen, comps = set(), []
    for start in sorted(adj):
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def stoer_wagner_min_cut(adj: dict) -> tuple[float, frozenset]:
    """Return ``(weight, side)`` of a global minimum cut.

    ``adj`` maps each vertex to ``{neighbor: weight}`` and must be symmetric
    with positive weights. Vertices are processed in sorted order, so the
    witness side is deterministic.
    """
    vertices = sorted(adj)
    if len(vertices) < 2:
        raise ValueError("minimum cut needs at least two vertices")
    comps = _components(adj)
    if len(comps) > 1:
        raise Disconnected(f"graph has {len(comps)} components")

    w = {u: {v: float(x) for v, x in adj[u].items() if v != u} for u in vertices}
    groups = {u: [u] for u in vertices}
    active = list(vertices)
    best, best_side = math.inf, None
    while len(active) > 1:
        # maximum adjacency ordering
        rank = {v: i for i, v in enumerate(active)}
        start = active[0]
        conn = {v: w[start].get(v, 0.0) for v in active[1:]}
        prev, last = start, start
        cut = 0.0
        while conn:
            nxt = max(conn, key=lambda v: (conn[v], -rank[v]))
            cut = conn.pop(nxt)
            for v, x in w[nxt].items():
                if v in conn:
                    conn[v] += x
            prev, last = last, nxt
        if cut < best:
            best, best_side = cut, frozenset(groups[last])
        # merge last into prev
        groups[prev].extend(groups.pop(last))
        for v, x in w.pop(last).items():
            if v == prev:
                w[prev].pop(last, None)
                continue
            w[prev][v] = w[prev].get(v, 0.0) + x
            w[v][prev] = w[v].get(prev, 0.0) + x
            w[v].pop(last, None)
        active.remove(last)
    return best, best_side
