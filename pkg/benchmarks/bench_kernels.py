#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--size {small,medium,large}]
"""

import argparse
import time

import numpy as np

from plarray import _kernels_np

try:
    from plarray import _kernels as compiled
except ImportError:
    compiled = None

SIZES = {
    # (elements M, freqs N, grid points G)
    "small": (256, 64, 1000),
    "medium": (1024, 128, 3000),
    "large": (8400, 256, 2000),
}


def bench(fn, *args, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", choices=SIZES, default="small")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    M, N, G = SIZES[args.size]
    rng = np.random.default_rng(0)
    H = np.ascontiguousarray(
        rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N))
    )
    pos = np.ascontiguousarray(rng.uniform(-0.8, 0.8, size=(M, 3)))
    pos[:, 0] = 0.0
    pts = np.ascontiguousarray(rng.uniform(1.0, 8.0, size=(G, 3)))
    freqs = np.linspace(5.45e9, 8.45e9, N)
    df = float(freqs[1] - freqs[0])

    amps = np.ascontiguousarray(rng.standard_normal(M) + 1j * rng.standard_normal(M))
    delays = np.ascontiguousarray(rng.uniform(0, 60e-9, M))
    vis = np.ones(M, dtype=np.uint8)
    out = np.zeros((M, N), complex)

    print(f"problem: M={M} elements, N={N} freqs, G={G} grid points")
    rows = []
    t_np = bench(_kernels_np.spherical_power, H, pos, pts, freqs, df, repeat=args.repeat)
    rows.append(("spherical_power", "numpy", t_np, 1.0))
    if compiled is not None:
        t_cy = bench(compiled.spherical_power, H, pos, pts, freqs, df, repeat=args.repeat)
        rows.append(("spherical_power", "cython", t_cy, t_np / t_cy))
        a = compiled.spherical_power(H, pos, pts, freqs, df)
        b = _kernels_np.spherical_power(H, pos, pts, freqs, df)
        assert np.abs(a - b).max() <= 1e-9 * b.max(), "backend mismatch"

    t_np = bench(_kernels_np.accumulate_specular, out, amps, delays, vis, freqs, repeat=args.repeat)
    rows.append(("accumulate_specular", "numpy", t_np, 1.0))
    if compiled is not None:
        t_cy = bench(compiled.accumulate_specular, out, amps, delays, vis, freqs, repeat=args.repeat)
        rows.append(("accumulate_specular", "cython", t_cy, t_np / t_cy))

    print(f"{'kernel':<22}{'backend':<10}{'best [s]':>12}{'speedup':>10}")
    for name, backend, t, s in rows:
        print(f"{name:<22}{backend:<10}{t:>12.4f}{s:>10.2f}")
    if compiled is None:
        print("compiled extension not built; only the NumPy fallback was timed")


if __name__ == "__main__":
    main()
