"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run on both backends with identical inputs; outputs are
compared before timing so a speedup never hides a wrong answer.
"""

import argparse
import timeit

import numpy as np

from manyminds import _kernels
from manyminds.process import CaricatureSpec, caricature_chain


def _cases():
    rng = np.random.default_rng(0)
    lo = rng.uniform(-5, 5, (400, 4))
    hi = lo + rng.uniform(0, 1, (400, 4))
    radius = np.zeros(400)
    cdf, absorbing = caricature_chain(CaricatureSpec(0.3, 0.5, 0.9, "C", (1, 2, 3), (1, 1)))
    trajs = np.arange(200_000, dtype=np.uint64)
    return {
        "uniform_array[2e5]": lambda k: k.uniform_array(7, trajs, 3),
        "sample_chain[1e5]": lambda k: k.sample_chain(cdf, absorbing, 0, 100_000, 10_000, 7),
        "relation_matrix[400]": lambda k: k.relation_matrix(lo, hi, radius),
        "uniform x1e4": lambda k: [k.uniform(7, 0, i) for i in range(10_000)],
    }


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    kernels = _kernels.backends()
    if "cython" not in kernels:
        print("compiled extension not built; only the fallback is available")
    print(f"{'kernel':<22} " + " ".join(f"{name:>12}" for name in kernels) + "     speedup")
    for label, fn in _cases().items():
        outs = {name: fn(k) for name, k in kernels.items()}
        ref = outs["python"]
        for name, out in outs.items():
            if not _same(out, ref):
                raise SystemExit(f"{label}: {name} disagrees with the fallback")
        times = {name: min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) for name, k in kernels.items()}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:<22} " + " ".join(f"{times[n] * 1e3:10.2f}ms" for n in kernels) + f"  {speed:8.1f}x")


if __name__ == "__main__":
    main()
