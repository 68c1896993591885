#!/usr/bin/env python3
"""Compare the compiled and pure-NumPy tree kernels.

Times `build_tree` and `predict_tree` on synthetic regression data at a few
sizes and verifies both backends agree on the result. Run with::

    python3 benchmarks/bench_tree_backends.py [--sizes 2000,8000,16000] [--repeats 3]
"""
import argparse
import time

import numpy as np

from sitabench.models import backend


def make_data(n, d, seed):
    rng = np.random.Generator(np.random.Philox(key=seed))
    X = rng.normal(size=(n, d))
    y = X[:, 0] * 2.0 + np.sin(X[:, 1 % d]) + 0.1 * rng.normal(size=n)
    return X, y


def time_call(fn, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="2000,8000,16000")
    parser.add_argument("--features", type=int, default=11)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    names = backend.available_backends()
    print(f"backends: {', '.join(names)} (default: {backend.BACKEND_NAME})")
    header = f"{'n':>8} {'d':>3} {'backend':>8} {'build (s)':>10} {'predict (s)':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))

    for n in sizes:
        X, y = make_data(n, args.features, seed=n)
        X_test, _ = make_data(n // 4, args.features, seed=n + 1)
        times = {}
        trees = {}
        for name in names:
            kernel = backend.get_backend(name)
            build_t, tree = time_call(lambda: kernel.build_tree(X, y), args.repeats)
            pred_t, pred = time_call(lambda: kernel.predict_tree(*tree, X_test), args.repeats)
            times[name] = (build_t, pred_t)
            trees[name] = (tree, pred)
        baseline = times["python"][0]
        for name in names:
            build_t, pred_t = times[name]
            speedup = baseline / build_t
            print(f"{n:>8} {args.features:>3} {name:>8} {build_t:>10.4f} {pred_t:>12.5f} {speedup:>7.1f}x")
        if len(names) == 2:
            (tree_a, pred_a), (tree_b, pred_b) = trees[names[0]], trees[names[1]]
            preds_equal = np.array_equal(pred_a, pred_b)
            nodes_equal = all(np.array_equal(a, b) for a, b in zip(tree_a, tree_b))
            print(f"         agreement: predictions={'yes' if preds_equal else 'NO'}"
                  f" node-arrays={'yes' if nodes_equal else 'no (float tie-breaks)'}")


if __name__ == "__main__":
    main()
