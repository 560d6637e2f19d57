"""Time the compiled kernels against the numpy/scipy fallback.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --scale 4 --repeat 7

Each row reports the best of ``--repeat`` runs per backend and the speedup
of the compiled backend over the fallback. Outputs are checked for equality
before timing.
"""
import argparse
import timeit

import numpy as np

from gnnids import kernels


def _cases(scale: int, rng: np.random.Generator):
    n_nodes, n_edges = 2000 * scale, 8000 * scale
    src = rng.integers(n_nodes, size=n_edges)
    dst = rng.integers(n_nodes, size=n_edges)
    # skewed endpoints so a few hubs dominate, like scan traffic
    hubs = rng.integers(20, size=n_edges // 4)
    src[: len(hubs)] = hubs

    rows = rng.integers(n_edges, size=20 * n_edges)
    order = np.argsort(rows, kind="stable")
    rows = rows[order]
    indices = rng.integers(n_edges, size=len(rows))
    indptr = np.searchsorted(rows, np.arange(n_edges + 1))
    data = rng.random(len(rows))
    x = rng.normal(size=(n_edges, 64))

    col = np.sort(rng.normal(size=20_000 * scale).round(2))
    y = (rng.random(len(col)) < 0.2).astype(np.int8)

    return {
        f"line_graph_csr E={n_edges}": lambda impl: kernels.line_graph_csr(src, dst, n_nodes, impl=impl),
        f"csr_spmm nnz={len(rows)} x64": lambda impl: kernels.csr_spmm(indptr, indices, data, x, impl=impl),
        f"gini_best_split n={len(col)}": lambda impl: kernels.gini_best_split(col, y, impl=impl),
    }


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(u, v) for u, v in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=1e-12) if isinstance(a, np.ndarray) else a == b


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", type=int, default=1, help="problem size multiplier")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    impls = kernels.implementations()
    print(f"active backend: {kernels.BACKEND}; available: {', '.join(sorted(impls))}")
    if "cython" not in impls:
        print("compiled kernels not built; timing the fallback only")
    cases = _cases(args.scale, np.random.default_rng(args.seed))
    names = sorted(impls)
    print(f"{'kernel':34s}" + "".join(f"{n:>12s}" for n in names) + f"{'speedup':>10s}")
    for label, fn in cases.items():
        outs = {n: fn(impls[n]) for n in names}
        if len(names) > 1 and not _same(outs["cython"], outs["python"]):
            raise SystemExit(f"{label}: backends disagree")
        best = {n: min(timeit.repeat(lambda: fn(impls[n]), number=1, repeat=args.repeat))
                for n in names}
        speed = f"{best['python'] / best['cython']:9.1f}x" if "cython" in best else f"{'-':>10s}"
        print(f"{label:34s}" + "".join(f"{best[n] * 1e3:10.2f}ms" for n in names) + speed)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
