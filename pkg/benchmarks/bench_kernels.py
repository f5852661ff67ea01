"""Time the numba and numpy kernel backends on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 5] [--n 2000] [--p 20]

Each kernel is called once untimed per backend (numba compiles or loads its
cache there), then timed over ``--repeat`` runs. Outputs of the two backends
are compared: trees must match exactly, float results are reported as the
largest absolute difference.
"""

import argparse
import math
import time

import numpy as np

from defectlens._accel import HAVE_NUMBA
from defectlens.kernels import build_tree, predict_tree, shapley_from_values


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def workloads(n, p, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = (X[:, 0] - 0.5 * X[:, 1] + rng.normal(size=n) > 0).astype(np.int64)
    w = np.where(y == 1, 1.5, 0.75)
    counts = np.bincount(rng.integers(0, n, n), minlength=n)
    mf = math.ceil(math.sqrt(p))
    q = 12
    v = rng.normal(size=1 << q)
    sw = np.array([math.factorial(s) * math.factorial(q - s - 1) / math.factorial(q) for s in range(q)])

    def tree(backend):
        return build_tree(X, y, w, counts, mf, 42, backend=backend)

    trees = {}

    def predict(backend):
        return predict_tree(*trees[backend], X, backend=backend)

    def shapley(backend):
        return shapley_from_values(v, q, sw, backend=backend)

    return [("build_tree", tree, trees), ("predict_tree", predict, None), ("shapley_from_values", shapley, None)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--p", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    if not HAVE_NUMBA:
        print("numba not installed; timing the numpy backend only")
    print(f"n={args.n} p={args.p} repeat={args.repeat}")
    print(f"{'kernel':22s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}  agreement")

    for name, fn, store in workloads(args.n, args.p, args.seed):
        times, outs = {}, {}
        for b in backends:
            first = fn(b)
            if store is not None:
                store[b] = first[:5]
            times[b], outs[b] = best_of(lambda: fn(b), args.repeat)
        cols = "".join(f"{times[b] * 1e3:10.2f}ms" for b in backends)
        if len(backends) == 2:
            a, c = outs["numpy"], outs["numba"]
            if isinstance(a, tuple):
                equal = "identical" if all(np.array_equal(u, v) for u, v in zip(a, c)) else "DIFFERENT"
            else:
                equal = f"max |diff| {np.max(np.abs(a - c)):.1e}"
            speed = f"{times['numpy'] / times['numba']:9.1f}x"
        else:
            equal, speed = "-", f"{'-':>10s}"
        print(f"{name:22s}{cols}{speed}  {equal}")


if __name__ == "__main__":
    main()
