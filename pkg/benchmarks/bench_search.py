"""Benchmark: compiled top-k kernel vs the pure-numpy fallback.

Times single-query exact search over random unit corpora and checks that the
two backends select identical rows while at it.

    python benchmarks/bench_search.py
    python benchmarks/bench_search.py --rows 20000,200000 --dim 384 --k 100
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from promptknn.kernels import fallback

try:
    from promptknn.kernels import _topk as compiled
except ImportError:
    compiled = None


def _unit_rows(rng, n, d):
    m = rng.standard_normal((n, d))
    m /= np.linalg.norm(m, axis=1, keepdims=True)
    return np.ascontiguousarray(m.astype(np.float32))


def _time_backend(fn, matrix, queries, k, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for q in queries:
            fn(matrix, q, k)
        best = min(best, (time.perf_counter() - start) / len(queries))
    return best * 1e3  # ms per query


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", default="10000,100000", help="comma-separated corpus sizes")
    parser.add_argument("--dim", type=int, default=384)
    parser.add_argument("--k", type=int, default=100)
    parser.add_argument("--queries", type=int, default=20)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    sizes = [int(s) for s in args.rows.split(",")]
    queries = [rng.standard_normal(args.dim) for _ in range(args.queries)]
    queries = [q / np.linalg.norm(q) for q in queries]

    if compiled is None:
        print("compiled kernel not built; timing the numpy fallback only")

    header = f"{'rows':>9}  {'dim':>4}  {'k':>4}  {'numpy ms/q':>11}"
    if compiled is not None:
        header += f"  {'cython ms/q':>12}  {'speedup':>8}"
    print(header)
    for n in sizes:
        matrix = _unit_rows(rng, n, args.dim)
        k = min(args.k, n)
        numpy_ms = _time_backend(fallback.topk_dot, matrix, queries, k, args.repeats)
        line = f"{n:>9}  {args.dim:>4}  {k:>4}  {numpy_ms:>11.3f}"
        if compiled is not None:
            cython_ms = _time_backend(compiled.topk_dot, matrix, queries, k, args.repeats)
            rows_c, _ = compiled.topk_dot(matrix, queries[0], k)
            rows_f, _ = fallback.topk_dot(matrix, queries[0], k)
            assert list(rows_c) == list(rows_f), "backends disagree"
            line += f"  {cython_ms:>12.3f}  {numpy_ms / cython_ms:>7.2f}x"
        print(line)


if __name__ == "__main__":
    main()
