"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from spinphase import _kernels_py

try:
    from spinphase import _kernels
except ImportError:
    _kernels = None


def operand(rng, jmax, eta=0):
    jm = [(j, m) for j in range(abs(eta), jmax + 1) for m in range(-j, j + 1)]
    j = np.array([p[0] for p in jm])
    m = np.array([p[1] for p in jm])
    c = rng.normal(size=len(jm)) + 1j * rng.normal(size=len(jm))
    return j, m, c


def cases():
    rng = np.random.default_rng(0)
    for jmax in (4, 8, 12):
        j1, m1, c1 = operand(rng, jmax)
        j2, m2, c2 = operand(rng, jmax)
        yield f"multiply_kernel jmax={jmax}", "multiply_kernel", (j1, m1, c1, 0, j2, m2, c2, 0, jmax)
    for tj in (20, 80, 200):
        yield f"threej_series 2j={tj}", "threej_series", (tj, tj, 2, -4)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'case':28s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>9s}")
    for label, name, argv in cases():
        fn_py = getattr(_kernels_py, name)
        n = 1 if name == "multiply_kernel" else 200
        t_py = min(timeit.repeat(lambda: fn_py(*argv), number=n, repeat=args.repeat)) / n
        if _kernels is None:
            print(f"{label:28s} {t_py:12.3e} {'n/a':>12s} {'':>9s}")
            continue
        fn_c = getattr(_kernels, name)
        t_c = min(timeit.repeat(lambda: fn_c(*argv), number=n, repeat=args.repeat)) / n
        print(f"{label:28s} {t_py:12.3e} {t_c:12.3e} {t_py / t_c:8.1f}x")


if __name__ == "__main__":
    main()
