"""Time the compiled blade-product kernels against the NumPy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat N] [--max-m M]

Prints one row per rank with the median time per product for each
backend and the speedup.  Dense random multivectors are used, which is
the worst case for both implementations.
"""
import argparse
import statistics
import timeit

import numpy as np

from twistorlab import _fallback

try:
    from twistorlab import _kernels
except ImportError:  # pragma: no cover - extension not built
    _kernels = None


def bench(fn, x, y, repeat: int) -> float:
    number = max(1, int(2000 / len(x)))
    times = timeit.repeat(lambda: fn(x, y), number=number, repeat=repeat)
    return statistics.median(times) / number


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--max-m", type=int, default=4)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    if _kernels is None:
        print("compiled extension not available; timing the fallback only")
    print(f"{'kernel':<18}{'m':>3}{'blades':>8}{'python [s]':>14}{'cython [s]':>14}{'speedup':>10}")
    for name in ("geometric_product", "outer_product"):
        for m in range(1, args.max_m + 1):
            size = 1 << (2 * m)
            x = rng.standard_normal(size) + 1j * rng.standard_normal(size)
            y = rng.standard_normal(size) + 1j * rng.standard_normal(size)
            t_py = bench(getattr(_fallback, name), x, y, args.repeat)
            if _kernels is None:
                print(f"{name:<18}{m:>3}{size:>8}{t_py:>14.3e}{'-':>14}{'-':>10}")
                continue
            fast = getattr(_kernels, name)
            if not np.allclose(fast(x, y), getattr(_fallback, name)(x, y), atol=1e-12):
                raise SystemExit(f"{name} backends disagree at m={m}")
            t_cy = bench(fast, x, y, args.repeat)
            print(f"{name:<18}{m:>3}{size:>8}{t_py:>14.3e}{t_cy:>14.3e}{t_py / t_cy:>10.1f}")


if __name__ == "__main__":
    main()
