# cython: language_level=3
"""Compiled counting kernels; signatures match ``_pure``."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef cnp.int64_t i64


def dependency_matrix(const i64[:] assign, const i64[:] src, const i64[:] dst,
                      Py_ssize_t n_modules):
    cdef cnp.ndarray[i64, ndim=2] out = np.zeros((n_modules, n_modules), dtype=np.int64)
    cdef i64[:, :] w = out
    cdef Py_ssize_t i
    for i in range(src.shape[0]):
        w[assign[src[i]], assign[dst[i]]] += 1
    return out


def commit_stats(const i64[:] assign, const i64[:] ptr, const i64[:] cls,
                 Py_ssize_t n_modules):
    cdef cnp.ndarray[i64, ndim=2] out = np.zeros((n_modules, n_modules), dtype=np.int64)
    cdef i64[:, :] mods_ct = out
    cdef i64 *counts = <i64 *> malloc(n_modules * sizeof(i64))
    cdef i64 *touched = <i64 *> malloc(n_modules * sizeof(i64))
    cdef Py_ssize_t k, i, x, y, nt, m, a, b
    cdef i64 ccp = 0, n
    if counts == NULL or touched == NULL:
        free(counts)
        free(touched)
        raise MemoryError()
    try:
        for m in range(n_modules):
            counts[m] = 0
        for k in range(ptr.shape[0] - 1):
            nt = 0
            for i in range(ptr[k], ptr[k + 1]):
                m = assign[cls[i]]
                if counts[m] == 0:
                    touched[nt] = m
                    nt += 1
                counts[m] += 1
            for x in range(nt):
                n = counts[touched[x]]
                ccp += n * (n - 1) // 2
                a = touched[x]
                for y in range(x + 1, nt):
                    b = touched[y]
                    mods_ct[a, b] += 1
                    mods_ct[b, a] += 1
            for x in range(nt):
                counts[touched[x]] = 0
    finally:
        free(counts)
        free(touched)
    return out, int(ccp)


def colocated_pairs(const i64[:] assign, const i64[:] ptr, const i64[:] members):
    cdef Py_ssize_t n_modules = 0, i, k, x, nt, m
    cdef i64 total = 0, n
    for i in range(assign.shape[0]):
        if assign[i] + 1 > n_modules:
            n_modules = assign[i] + 1
    cdef i64 *counts = <i64 *> malloc((n_modules + 1) * sizeof(i64))
    cdef i64 *touched = <i64 *> malloc((n_modules + 1) * sizeof(i64))
    if counts == NULL or touched == NULL:
        free(counts)
        free(touched)
        raise MemoryError()
    try:
        for m in range(n_modules):
            counts[m] = 0
        for k in range(ptr.shape[0] - 1):
            nt = 0
            for i in range(ptr[k], ptr[k + 1]):
                m = assign[members[i]]
                if counts[m] == 0:
                    touched[nt] = m
                    nt += 1
                counts[m] += 1
            for x in range(nt):
                n = counts[touched[x]]
                total += n * (n - 1) // 2
                counts[touched[x]] = 0
    finally:
        free(counts)
        free(touched)
    return int(total)


def nondominated_ranks(objs):
    cdef const double[:, :] f = np.ascontiguousarray(objs, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0], m = f.shape[1]
    cdef cnp.ndarray[i64, ndim=1] ranks_arr = np.zeros(n, dtype=np.int64)
    cdef i64[:] ranks = ranks_arr
    cdef cnp.ndarray[i64, ndim=1] count_arr = np.zeros(n, dtype=np.int64)
    cdef i64[:] count = count_arr
    # dominated-by lists in CSR-like flat storage
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] dom_arr = np.zeros((n, n), dtype=np.uint8)
    cdef cnp.uint8_t[:, :] dom = dom_arr
    cdef Py_ssize_t i, j, k, head, tail, nxt
    cdef bint i_le, j_le, strict_i, strict_j
    cdef double a, b
    for i in range(n):
        for j in range(i + 1, n):
            i_le = True
            j_le = True
            strict_i = False
            strict_j = False
            for k in range(m):
                a = f[i, k]
                b = f[j, k]
                if a < b:
                    j_le = False
                    strict_i = True
                elif b < a:
                    i_le = False
                    strict_j = True
            if i_le and strict_i:
                dom[i, j] = 1
                count[j] += 1
            elif j_le and strict_j:
                dom[j, i] = 1
                count[i] += 1
    cdef cnp.ndarray[i64, ndim=1] queue_arr = np.empty(n, dtype=np.int64)
    cdef i64[:] queue = queue_arr
    tail = 0
    for i in range(n):
        if count[i] == 0:
            queue[tail] = i
            tail += 1
            ranks[i] = 0
    head = 0
    while head < tail:
        i = queue[head]
        head += 1
        for j in range(n):
            if dom[i, j]:
                count[j] -= 1
                if count[j] == 0:
                    ranks[j] = ranks[i] + 1
                    queue[tail] = j
                    tail += 1
    return ranks_arr
