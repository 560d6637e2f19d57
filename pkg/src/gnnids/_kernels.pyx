# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Mirrors ``gnnids._fallback`` function for function."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64
ctypedef cnp.float64_t f64


def csr_spmm(const i64[::1] indptr, const i64[::1] indices,
             const f64[::1] data, const f64[:, ::1] x):
    """Sparse (CSR) times dense, accumulated row by row in index order."""
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef Py_ssize_t d = x.shape[1]
    out_arr = np.zeros((n_rows, d), dtype=np.float64)
    cdef f64[:, ::1] out = out_arr
    cdef Py_ssize_t i, k, j, c
    cdef f64 w
    with nogil:
        for i in range(n_rows):
            for k in range(indptr[i], indptr[i + 1]):
                j = indices[k]
                w = data[k]
                for c in range(d):
                    out[i, c] += w * x[j, c]
    return out_arr


def line_graph_csr(const i64[::1] src, const i64[::1] dst, i64 n_nodes):
    """Adjacency of the line graph: edges are adjacent iff they share an
    endpoint (direction ignored). Rows are sorted, no self loops, no
    duplicates."""
    cdef Py_ssize_t n_edges = src.shape[0]
    cdef Py_ssize_t e, k, v, p, f, nnz
    # node -> incident edges, ascending edge id
    inc_ptr_arr = np.zeros(n_nodes + 1, dtype=np.int64)
    cdef i64[::1] inc_ptr = inc_ptr_arr
    for e in range(n_edges):
        inc_ptr[src[e] + 1] += 1
        if dst[e] != src[e]:
            inc_ptr[dst[e] + 1] += 1
    for v in range(n_nodes):
        inc_ptr[v + 1] += inc_ptr[v]
    inc_arr = np.empty(inc_ptr[n_nodes], dtype=np.int64)
    cdef i64[::1] inc = inc_arr
    fill_arr = inc_ptr_arr[:-1].copy()
    cdef i64[::1] fill = fill_arr
    for e in range(n_edges):
        inc[fill[src[e]]] = e
        fill[src[e]] += 1
        if dst[e] != src[e]:
            inc[fill[dst[e]]] = e
            fill[dst[e]] += 1

    indptr_arr = np.zeros(n_edges + 1, dtype=np.int64)
    cdef i64[::1] indptr = indptr_arr
    cdef i64 a0, a1, b0, b1, last
    # pass 1: count merged neighbours
    for e in range(n_edges):
        a0 = inc_ptr[src[e]]
        a1 = inc_ptr[src[e] + 1]
        if dst[e] != src[e]:
            b0 = inc_ptr[dst[e]]
            b1 = inc_ptr[dst[e] + 1]
        else:
            b0 = 0
            b1 = 0
        nnz = 0
        last = -1
        while a0 < a1 or b0 < b1:
            if b0 >= b1 or (a0 < a1 and inc[a0] <= inc[b0]):
                f = inc[a0]
                a0 += 1
            else:
                f = inc[b0]
                b0 += 1
            if f != e and f != last:
                nnz += 1
            last = f
        indptr[e + 1] = indptr[e] + nnz

    indices_arr = np.empty(indptr[n_edges], dtype=np.int64)
    cdef i64[::1] indices = indices_arr
    # pass 2: fill
    for e in range(n_edges):
        a0 = inc_ptr[src[e]]
        a1 = inc_ptr[src[e] + 1]
        if dst[e] != src[e]:
            b0 = inc_ptr[dst[e]]
            b1 = inc_ptr[dst[e] + 1]
        else:
            b0 = 0
            b1 = 0
        p = indptr[e]
        last = -1
        while a0 < a1 or b0 < b1:
            if b0 >= b1 or (a0 < a1 and inc[a0] <= inc[b0]):
                f = inc[a0]
                a0 += 1
            else:
                f = inc[b0]
                b0 += 1
            if f != e and f != last:
                indices[p] = f
                p += 1
            last = f
    return indptr_arr, indices_arr


def gini_best_split(const f64[::1] x, const cnp.int8_t[::1] y):
    """Best Gini threshold on a column already sorted ascending.

    Returns ``(threshold, weighted_impurity, found)``. Samples with
    ``value <= threshold`` go left. The first minimum wins on ties.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef i64 total_pos = 0
    for i in range(n):
        total_pos += y[i]
    cdef i64 left_pos = 0
    cdef f64 nl, nr, pl, pr, score
    cdef f64 best = 1e300
    cdef f64 thr = 0.0
    cdef f64 mid
    cdef bint found = False
    for i in range(n - 1):
        left_pos += y[i]
        if x[i] >= x[i + 1]:
            continue
        nl = i + 1
        nr = n - nl
        pl = left_pos / nl
        pr = (total_pos - left_pos) / nr
        score = (nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr)) / n
        if score < best:
            best = score
            mid = 0.5 * (x[i] + x[i + 1])
            thr = mid if mid < x[i + 1] else x[i]
            found = True
    return thr, best, found
