"""Hot-loop kernels, compiled when available.

The Cython extension ``gnnids._kernels`` is used if it imports; otherwise the
numpy/scipy fallback is used. Set ``GNNIDS_PURE_PYTHON=1`` to force the
fallback. ``BACKEND`` names the active implementation.
"""
import os

import numpy as np

from . import _fallback

_compiled = None
if os.environ.get("GNNIDS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _fallback


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def csr_spmm(indptr, indices, data, x, impl=None):
    """Return ``A @ x`` for CSR ``A`` given as (indptr, indices, data)."""
    impl = impl or _impl
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("x must be 2-D")
    return impl.csr_spmm(
        _i64(indptr), _i64(indices), np.ascontiguousarray(data, dtype=np.float64), x
    )


def line_graph_csr(src, dst, n_nodes, impl=None):
    """CSR (indptr, indices) of the undirected line graph of a multigraph."""
    impl = impl or _impl
    return impl.line_graph_csr(_i64(src), _i64(dst), int(n_nodes))


def gini_best_split(x_sorted, y_sorted, impl=None):
    """Best split threshold on one pre-sorted column, see ``_kernels``."""
    impl = impl or _impl
    thr, score, found = impl.gini_best_split(
        np.ascontiguousarray(x_sorted, dtype=np.float64),
        np.ascontiguousarray(y_sorted, dtype=np.int8),
    )
    return float(thr), float(score), bool(found)


def implementations():
    """Available backends, keyed by name (used by the parity tests and bench)."""
    out = {"python": _fallback}
    if _compiled is not None:
        out["cython"] = _compiled
    return out
