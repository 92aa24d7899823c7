"""Time the convolution kernels under numba and under the numpy fallback.

Run with ``python benchmarks/bench_kernels.py``.  Each kernel is called once
to trigger compilation before timing.  Results also confirm the two backends
agree to rounding.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from conesolve import _accel


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2001, help="samples along the convolution axis")
    ap.add_argument("--batch", type=int, default=64, help="independent rows")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    f = rng.normal(size=(args.batch, args.n)) + 1j * rng.normal(size=(args.batch, args.n))
    alpha, h = 3.0 + 2.0j, 0.01
    backends = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])
    print(f"n = {args.n}, batch = {args.batch}, best of {args.repeat}")
    print(f"{'kernel':<12}" + "".join(f"{b:>14}" for b in backends) + f"{'speed-up':>12}{'max diff':>12}")
    for name in ("conv_left", "conv_right", "conv_sym"):
        fn = getattr(_accel, name)
        best, out = {}, {}
        for b in backends:
            out[b] = fn(alpha, f, h, backend=b)  # warm-up / compile
            best[b] = min(timeit.repeat(lambda: fn(alpha, f, h, backend=b), number=1, repeat=args.repeat))
        row = f"{name:<12}" + "".join(f"{best[b] * 1e3:>11.2f} ms" for b in backends)
        if "numba" in best:
            diff = float(np.max(np.abs(out["numba"] - out["numpy"])))
            row += f"{best['numpy'] / best['numba']:>11.1f}x{diff:>12.1e}"
        print(row)


if __name__ == "__main__":
    main()
