"""Compare the compiled and numpy Lloyd backends on spectral embeddings.

    python3 benchmarks/bench_lloyd.py --sizes 500 1000 2000 --restarts 20
"""
import argparse
import time

import numpy as np

from mkcdnm import lloyd


def embedding(n, k, seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, k, n)
    X = np.eye(k)[labels] + 0.3 * rng.standard_normal((n, k))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 2000])
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--restarts", type=int, default=20)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    backends = lloyd.available_backends()
    print(f"default backend: {lloyd.BACKEND}; available: {', '.join(backends)}")
    print(f"{'n':>6} " + " ".join(f"{b:>12}" for b in backends) + "   speedup  identical")
    for n in args.sizes:
        X = embedding(n, args.k, n)
        row, results = [], []
        for b in backends:
            t, res = best_of(lambda: lloyd.kmeans(X, args.k, args.restarts, seed=0, backend=b),
                             args.repeats)
            row.append(t)
            results.append(res)
        speed = row[-1] / row[0] if len(row) == 2 else float("nan")
        same = all(np.array_equal(r.all_labels, results[0].all_labels) for r in results)
        print(f"{n:>6} " + " ".join(f"{t * 1e3:>10.1f}ms" for t in row)
              + f"   {speed:>6.1f}x  {same}")


if __name__ == "__main__":
    main()
