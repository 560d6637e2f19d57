"""numpy/scipy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np
import scipy.sparse as sp


def csr_spmm(indptr, indices, data, x):
    n_rows = len(indptr) - 1
    mat = sp.csr_matrix((data, indices, indptr), shape=(n_rows, x.shape[0]))
    return np.ascontiguousarray(mat @ x, dtype=np.float64)


def line_graph_csr(src, dst, n_nodes):
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    n_edges = len(src)
    if n_edges == 0:
        return np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    # edge-node incidence; a self loop touches its node once
    loop = src == dst
    rows = np.concatenate([np.arange(n_edges), np.arange(n_edges)[~loop]])
    cols = np.concatenate([src, dst[~loop]])
    inc = sp.csr_matrix(
        (np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(n_edges, n_nodes)
    )
    adj = (inc @ inc.T).tocsr()
    adj.setdiag(0)
    adj.eliminate_zeros()
    adj.sort_indices()
    return adj.indptr.astype(np.int64), adj.indices.astype(np.int64)


def gini_best_split(x, y):
    n = len(x)
    if n < 2:
        return 0.0, np.inf, False
    y = y.astype(np.int64)
    left_pos = np.cumsum(y)[:-1]
    total_pos = y.sum()
    valid = x[:-1] < x[1:]
    if not valid.any():
        return 0.0, np.inf, False
    nl = np.arange(1, n, dtype=np.float64)
    nr = n - nl
    pl = left_pos / nl
    pr = (total_pos - left_pos) / nr
    score = (nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr)) / n
    score = np.where(valid, score, np.inf)
    i = int(np.argmin(score))
    mid = 0.5 * (x[i] + x[i + 1])
    thr = mid if mid < x[i + 1] else x[i]
    return float(thr), float(score[i]), True
