"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Each kernel runs on the same inputs under both backends; outputs are
checked for exact equality before timings are reported.
"""

import argparse
import time

import numpy as np

from crowdalpha import kernels


def random_graph(rng, n, avg_degree):
    m = n * avg_degree // 2
    a = rng.integers(0, n, size=m)
    b = rng.integers(0, n, size=m)
    keep = a != b
    pairs = {(int(min(x, y)), int(max(x, y))) for x, y in zip(a[keep], b[keep])}
    adj = [[] for _ in range(n)]
    for x, y in pairs:
        adj[x].append(y)
        adj[y].append(x)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in adj])
    indices = np.fromiter((v for r in adj for v in sorted(r)), dtype=np.int64, count=int(indptr[-1]))
    return indptr, indices


def sparse_rows(rng, rows, dim, nnz):
    lengths = rng.integers(1, 2 * nnz, size=rows)
    indptr = np.zeros(rows + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(lengths)
    indices = np.concatenate([np.sort(rng.choice(dim, size=k, replace=False)) for k in lengths]).astype(np.int64)
    labels = rng.choice([-1.0, 1.0], size=rows)
    return indptr, indices, labels


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.tobytes() == b.tobytes()
    return a == b


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="multiply problem sizes")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if "compiled" not in kernels.BACKENDS:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")

    rng = np.random.default_rng(args.seed)
    n = int(20_000 * args.scale)
    g_ptr, g_idx = random_graph(rng, n, 10)
    sources = np.sort(rng.choice(n, size=min(n, 50), replace=False)).astype(np.int64)
    rows = int(20_000 * args.scale)
    x_ptr, x_idx, y = sparse_rows(rng, rows, 2_000, 8)
    order = np.concatenate([rng.permutation(rows) for _ in range(5)]).astype(np.int64)

    cases = {
        "hinge_sgd": lambda b: kernels.hinge_sgd(x_ptr, x_idx, y, order, 0.1, 1e-4, 2_000, backend=b),
        "bfs_distance_sum": lambda b: kernels.bfs_distance_sum(g_ptr, g_idx, sources, backend=b),
        "local_clustering": lambda b: kernels.local_clustering(g_ptr, g_idx, backend=b),
    }
    print(f"{'kernel':<18} {'python s':>10} {'compiled s':>11} {'speedup':>8}  equal")
    for name, run in cases.items():
        tp, op = best_of(lambda: run("python"), args.repeat)
        tc, oc = best_of(lambda: run("compiled"), args.repeat)
        print(f"{name:<18} {tp:>10.3f} {tc:>11.4f} {tp / tc:>7.0f}x  {same(op, oc)}")


if __name__ == "__main__":
    main()
