"""Compare the compiled and pure-Python kernels on representative workloads.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import random
import timeit

import numpy as np

from scatterlab import _kernels_py as py
from scatterlab.lattice_algebra import Q, TruncatedSeries

try:
    from scatterlab import _ckernels as cc
except ImportError:
    cc = None


def random_series(rng, order, n):
    terms = {}
    for _ in range(n):
        m = (rng.randint(-4, 6), rng.randint(-4, 6))
        terms[(m, rng.randint(0, order))] = Q(rng.randint(-9, 9), rng.randint(1, 9))
    return TruncatedSeries(order, terms)._d


def random_lie(rng, order, n):
    d = {}
    for _ in range(n):
        m1, m2 = rng.randint(1, 5), rng.randint(0, 5)
        c = Q(rng.randint(-9, 9), rng.randint(1, 9))
        key = TruncatedSeries(order, {((m1, m2), rng.randint(1, order)): 1})
        (k,) = key._d
        d[k] = (-m2 * c, m1 * c)
    return d


def workloads(rng):
    order = 8
    a, b = random_series(rng, order, 200), random_series(rng, order, 200)
    x, y = random_lie(rng, order, 150), random_lie(rng, order, 150)
    dterms = [(k, v[0], v[1]) for k, v in list(x.items())[:40]]
    z = np.random.default_rng(0).standard_normal((1 << 18, 3))
    tr = np.random.default_rng(1).standard_normal((3, 3))
    return {
        "series_mul": lambda k: k.series_mul(a, b, order),
        "derivation_apply": lambda k: k.derivation_apply(a, dterms, order),
        "lie_bracket": lambda k: k.lie_bracket(x, y, order),
        "orthant_count": lambda k: k.orthant_count(z, tr),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = random.Random(0)
    print(f"{'kernel':<18}{'python [ms]':>14}{'compiled [ms]':>16}{'speedup':>10}")
    for name, fn in workloads(rng).items():
        tp = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        if cc is None:
            print(f"{name:<18}{tp:>14.2f}{'n/a':>16}{'':>10}")
            continue
        assert fn(py) == fn(cc), name
        tc = min(timeit.repeat(lambda: fn(cc), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<18}{tp:>14.2f}{tc:>16.2f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
