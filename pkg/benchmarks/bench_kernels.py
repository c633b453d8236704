#!/usr/bin/env python3
"""Compare the numba and numpy versions of the two hot kernels.

    python3 benchmarks/bench_kernels.py [--n 16] [--repeat 3]

The first numba call includes JIT compilation (or a cache load), so it is
reported separately from the steady-state timings.
"""

import argparse
import time

import numpy as np

from mhs_slab import _accel
from mhs_slab.current_equation import gauss_nodes
from mhs_slab.spectral_core import TorusGrid2


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def kernel_case(n, n_s, rng):
    grid = TorusGrid2(n, n)
    x, y = grid.mesh
    P = grid.size
    m = np.broadcast_to(grid.m, grid.shape).ravel().astype(float)
    k = np.broadcast_to(grid.n, grid.shape).ravel().astype(float)
    s, ws = gauss_nodes(n_s, 1.0)
    lam1, lam2, theta = (1e-2 * rng.standard_normal((n_s, P)) for _ in range(3))
    darea = (2 * np.pi) ** 2 / P
    return (m, k, grid.kabs.ravel(), lam1, lam2, theta, s, ws, 1.0, x.ravel(), y.ravel(), darea)


def fourier_case(n, npts, rng):
    grid = TorusGrid2(n, n)
    coeffs = np.fft.fft2(rng.standard_normal((3, n, n))) * grid.keep
    m = np.broadcast_to(grid.m, grid.shape)[:, 0].astype(float)
    k = np.broadcast_to(grid.n, grid.shape)[0].astype(float)
    xs, ys = rng.uniform(0, 2 * np.pi, (2, npts))
    return coeffs, m, k, xs, ys


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--n-s", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)

    cases = {
        "kernel_matrices": (
            _accel.kernel_matrices_numpy,
            _accel.kernel_matrices_numba,
            kernel_case(args.n, args.n_s, rng),
        ),
        "fourier_eval": (
            _accel.fourier_eval_numpy,
            _accel.fourier_eval_numba,
            fourier_case(args.n, 33 * args.n * args.n, rng),
        ),
    }
    print(f"grid {args.n}x{args.n}, n_s={args.n_s}, best of {args.repeat}")
    print(f"{'kernel':18s} {'first numba':>12s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, (f_np, f_nb, case) in cases.items():
        t0 = time.perf_counter()
        f_nb(*case)
        first = time.perf_counter() - t0
        t_nb, out_nb = best_of(lambda: f_nb(*case), args.repeat)
        t_np, out_np = best_of(lambda: f_np(*case), args.repeat)
        diff = float(np.max(np.abs(out_nb - out_np)))
        print(f"{name:18s} {first:12.3f} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.2f} {diff:10.2e}")


if __name__ == "__main__":
    main()
