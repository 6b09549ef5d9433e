"""Benchmark the compiled kernels against the numpy fallback.

Run as ``python -m samplation.bench``.  Also double-checks that both lanes
return identical bytes on every benchmarked call.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from .kernels import available_backends, load_backend


def _cases():
    pool = np.random.default_rng(11).normal(size=(1800, 6))
    pool_c = np.ascontiguousarray(pool)
    nn_py = load_backend("py").knn_table(pool_c, 5)
    return [
        ("reservoir_counts(m=20, n=5, trials=200k)",
         lambda k: k.reservoir_counts(20, 5, 200_000, 123)),
        ("srs_counts(m=6, n=3, trials=100k)",
         lambda k: k.srs_counts(6, 3, 100_000, 99)),
        ("smote_fill(pool=1800x6, count=16k)",
         lambda k: k.smote_fill(pool_c, nn_py, 16_000, 7)[0]),
        ("knn_table(pool=1800x6, k=5)",
         lambda k: k.knn_table(pool_c, 5)),
    ]


def run(repeat: int = 3) -> int:
    backends = available_backends()
    mods = {name: load_backend(name) for name in backends}
    print(f"available backends: {', '.join(backends)}")
    if len(backends) == 1:
        print("compiled backend missing; timing the fallback only")
    width = max(len(name) for name, _ in _cases())
    header = f"{'kernel':<{width}}  " + "  ".join(f"{b:>10}" for b in backends)
    print(header)
    print("-" * len(header))
    for name, fn in _cases():
        times = {}
        results = {}
        for b in backends:
            best = float("inf")
            for _ in range(repeat):
                t0 = time.perf_counter()
                out = fn(mods[b])
                best = min(best, time.perf_counter() - t0)
            times[b] = best
            results[b] = np.asarray(out)
        if len(backends) == 2 and not np.array_equal(results["c"], results["py"]):
            raise AssertionError(f"backend outputs differ on {name}")
        cells = "  ".join(f"{times[b] * 1e3:9.2f}ms" for b in backends)
        line = f"{name:<{width}}  {cells}"
        if len(backends) == 2:
            line += f"  (x{times['py'] / times['c']:.1f})"
        print(line)
    if len(backends) == 2:
        print("all outputs bit-identical across backends")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3,
                        help="timing repetitions per kernel (best-of)")
    args = parser.parse_args(argv)
    return run(args.repeat)


if __name__ == "__main__":
    raise SystemExit(main())
