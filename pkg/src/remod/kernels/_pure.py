"""Pure-Python/numpy implementations of the counting kernels.

These are the reference versions; ``_fast.pyx`` mirrors every signature
and must return identical integers.
"""
import numpy as np


def dependency_matrix(assign, src, dst, n_modules):
    """Count class dependencies per (module, module) pair.

    ``W[i, j]`` is the number of class dependencies from a class in module i
    to a class in module j; the diagonal holds intra-module counts.
    """
    w = np.zeros((n_modules, n_modules), dtype=np.int64)
    if len(src):
        np.add.at(w, (assign[src], assign[dst]), 1)
    return w


def commit_stats(assign, ptr, cls, n_modules):
    """Co-change statistics of a commit history under ``assign``.

    Returns ``(mods_ct, ccp)``: a symmetric matrix counting the commits that
    touch both modules of a pair, and the number of co-changed class pairs
    that are also co-located.
    """
    mods_ct = np.zeros((n_modules, n_modules), dtype=np.int64)
    ccp = 0
    a = assign.tolist()
    c = cls.tolist()
    p = ptr.tolist()
    for k in range(len(p) - 1):
        counts = {}
        for i in range(p[k], p[k + 1]):
            m = a[c[i]]
            counts[m] = counts.get(m, 0) + 1
        touched = sorted(counts)
        for m in touched:
            n = counts[m]
            ccp += n * (n - 1) // 2
        for x in range(len(touched)):
            for y in range(x + 1, len(touched)):
                mods_ct[touched[x], touched[y]] += 1
                mods_ct[touched[y], touched[x]] += 1
    return mods_ct, ccp


def colocated_pairs(assign, ptr, members):
    """Sum over groups of the number of member pairs sharing a module.

    Groups are given in CSR form (``ptr``, ``members``). Used for CRP, where
    each group is the set of classes one client depends on.
    """
    total = 0
    a = assign.tolist()
    mem = members.tolist()
    p = ptr.tolist()
    for k in range(len(p) - 1):
        counts = {}
        for i in range(p[k], p[k + 1]):
            m = a[mem[i]]
            counts[m] = counts.get(m, 0) + 1
        for n in counts.values():
            total += n * (n - 1) // 2
    return total


def nondominated_ranks(objs):
    """Pareto rank of every row of ``objs`` (all objectives minimized)."""
    f = np.asarray(objs, dtype=np.float64)
    n = f.shape[0]
    ranks = np.zeros(n, dtype=np.int64)
    if n == 0:
        return ranks
    le = np.all(f[:, None, :] <= f[None, :, :], axis=2)
    lt = np.any(f[:, None, :] < f[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    counts = dom.sum(axis=0)
    current = np.flatnonzero(counts == 0)
    rank = 0
    while current.size:
        ranks[current] = rank
        counts = counts - dom[current].sum(axis=0)
        counts[current] = -1
        current = np.flatnonzero(counts == 0)
        rank += 1
    return ranks
