"""Compare the compiled kernels with the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from meanval import _kernels_py, exprlang

try:
    from meanval import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def cases():
    rng = np.random.default_rng(0)
    pts = np.ascontiguousarray(rng.normal(scale=3, size=(200_000, 2)))
    e = exprlang.parse("sin(x0)*exp(-x1^2) + indicator(abs(x1) <= abs(x0)*0.41421356)", 2)
    seq = rng.normal(size=1_000_000)
    avgs = np.cumsum(seq) / np.arange(1, seq.size + 1)
    return {
        "eval_program (200k points)": lambda k: k.eval_program(e._code, e._consts, pts, e._stack),
        "running_mean (1e6 terms)": lambda k: k.running_mean(seq),
        "window_spread (1e6, w=5)": lambda k: k.window_spread(avgs, 5),
    }


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    print(f"{'kernel':<30} {'python [ms]':>12} {'compiled [ms]':>14} {'speedup':>8}")
    for name, fn in cases().items():
        tp = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        if compiled is None:
            print(f"{name:<30} {tp:12.2f} {'n/a':>14} {'n/a':>8}")
            continue
        tc = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<30} {tp:12.2f} {tc:14.2f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
