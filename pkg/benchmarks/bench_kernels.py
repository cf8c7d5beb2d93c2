"""Time every kernel under both backends.

    python3 benchmarks/bench_kernels.py [--p 211] [--repeat 5]

numba timings exclude the first (compiling) call.  Dense p x p inputs make
p above a few thousand impractical.
"""

import argparse
import math
import timeit

import numpy as np

from legabor import kernels
from legabor.kernels import IMPLS
from legabor.zpz import build_context


def cases(p):
    ctx = build_context(p)
    chi, roots = ctx.chi, ctx.roots
    rng = np.random.default_rng(0)
    r = rng.normal(size=p) + 1j * rng.normal(size=p)
    X = np.zeros((p, p), np.complex128)
    X[rng.integers(p, size=8), rng.integers(p, size=8)] = 1.0
    dense = rng.normal(size=(p, p)) + 0j
    m = max(2, math.isqrt(p) // 2 * 2)
    lags = np.arange(0, 2 * m, dtype=np.int64)
    weights = rng.normal(size=lags.size) + 0j
    H = rng.normal(size=(24, 24)) + 1j * rng.normal(size=(24, 24))
    H = H + H.conj().T
    block = min(p, 64)
    return {
        "twisted_rows": (chi, roots, 0, block),
        "sine_sum": (p, round(p ** 0.8), m, m),
        "lagged_twisted_sum": (chi, roots, lags, weights, 3),
        "correlate": (chi, roots, r, 1 / math.sqrt(p - 1)),
        "synthesize": (chi, roots, X, 1 / math.sqrt(p - 1)),
        "synthesize_dense": (chi, roots, dense, 1 / math.sqrt(p - 1)),
        "jacobi_eigh": (H, 1e-12, 60),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--p", type=int, default=211)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"p = {args.p}, dispatch: {kernels.BACKEND} (FFT-bound: {', '.join(kernels.FFT_BOUND)})")
    print(f"{'kernel':<20}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>10}")
    for name, call_args in cases(args.p).items():
        times = {}
        for backend in ("numba", "numpy"):
            fn = IMPLS[backend][name.removesuffix("_dense")]
            fn(*call_args)
            number = 3
            best = min(timeit.repeat(lambda: fn(*call_args), number=number, repeat=args.repeat))
            times[backend] = 1e3 * best / number
        print(f"{name:<20}{times['numba']:>12.3f}{times['numpy']:>12.3f}{times['numpy'] / times['numba']:>9.1f}x")


if __name__ == "__main__":
    main()
