"""Benchmark: compiled kernel core vs the pure-Python fallback.

Times scaled_iv_e and the Bessel heat kernel on batched inputs.  Run with

    python3 benchmarks/bench_kernels.py

Set QUCLAB_PURE_PY=1 to confirm the fallback selection path.
"""

import time

import numpy as np

from quclab import _kernels_np
from quclab.kernels import BACKEND

try:
    from quclab import _kernels_c
except ImportError:
    _kernels_c = None


def _time(fn, *args, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    z = rng.uniform(0.0, 50.0, size=200_000)
    nu = -0.25
    x = rng.uniform(0.05, 3.0, size=200_000)
    y = rng.uniform(0.05, 3.0, size=200_000)

    print(f"active backend: {BACKEND}")
    rows = [("numpy", _kernels_np)]
    if _kernels_c is not None:
        rows.append(("cython", _kernels_c))
    results = {}
    for name, mod in rows:
        tb = _time(mod.scaled_iv_e, nu, z)
        tk = _time(mod.bessel_heat_kernel_grid, x, y, 0.7, -0.5)
        results[name] = (tb, tk)
        print(f"{name:>8}: scaled_iv_e {tb * 1e3:8.2f} ms   "
              f"heat kernel {tk * 1e3:8.2f} ms")
    z_small = z[:64]
    for name, mod in rows:
        t0 = time.perf_counter()
        for _ in range(2000):
            mod.scaled_iv_e(nu, z_small)
        us = (time.perf_counter() - t0) / 2000 * 1e6
        print(f"{name:>8}: scaled_iv_e (64-point batch) {us:8.1f} us/call")
    if len(results) == 2:
        sb = results["numpy"][0] / results["cython"][0]
        sk = results["numpy"][1] / results["cython"][1]
        print(f"large-batch speedup: scaled_iv_e x{sb:.2f}, "
              f"heat kernel x{sk:.2f}")
        ref = _kernels_np.scaled_iv_e(nu, z)
        got = _kernels_c.scaled_iv_e(nu, z)
        print(f"agreement: {np.max(np.abs(got - ref)):.2e}")


if __name__ == "__main__":
    main()
