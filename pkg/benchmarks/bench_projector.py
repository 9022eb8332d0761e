#!/usr/bin/env python3
"""Benchmark the compiled projector kernels against the pure-numpy fallback.

Runs forward projection, backprojection, and a short MLEM loop on a few
geometries, reports wall-clock times and speedups, and verifies that both
backends produce bit-identical output (they execute the same operations in
the same order).

Usage:  python3 benchmarks/bench_projector.py [--repeats N]
"""

import argparse
import time

import numpy as np

from sinodiff import ProjectionGeometry, Projector, available_backends, random_phantom
from sinodiff.mlem import MlemConfig, reconstruct


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_geometry(size, n_angles, n_bins, repeats):
    geo = ProjectionGeometry(n_angles=n_angles, n_bins=n_bins, image_size=size)
    img = random_phantom(seed=0, size=size)
    img64 = img.data.astype(np.float64)

    projs = {name: Projector(geo, kernels=mod) for name, mod in available_backends.items()}
    sinos = {name: p.forward_array(img64) for name, p in projs.items()}
    backs = {name: p.backproject_array(sinos[name]) for name, p in projs.items()}

    names = sorted(projs)
    if len(names) == 2:
        a, b = names
        assert sinos[a].tobytes() == sinos[b].tobytes(), "forward outputs differ"
        assert backs[a].tobytes() == backs[b].tobytes(), "backproject outputs differ"
        parity = "bit-identical"
    else:
        parity = "only one backend built"

    print(f"\ngeometry {n_angles}x{n_bins}, image {size}x{size}  ({parity})")
    header = f"  {'operation':<22}" + "".join(f"{n:>12}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)

    ops = {
        "forward": lambda p: (lambda: p.forward_array(img64)),
        "backproject": lambda p: (lambda: p.backproject_array(sinos[names[0]])),
        "mlem (10 iterations)": lambda p: (
            lambda: reconstruct(p, p.forward(img), MlemConfig(n_iterations=10))
        ),
    }
    for label, make in ops.items():
        times = [_time(make(projs[n]), repeats) for n in names]
        row = f"  {label:<22}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            slow, fast = (times[0], times[1]) if names[0] == "python" else (times[1], times[0])
            row += f"{slow / fast:>9.1f}x"
        print(row)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="repetitions per measurement; best time wins (default 5)")
    args = parser.parse_args()

    print("available backends:", ", ".join(sorted(available_backends)))
    for size, n_angles, n_bins in ((32, 45, 47), (64, 90, 95), (128, 180, 191)):
        bench_geometry(size, n_angles, n_bins, args.repeats)


if __name__ == "__main__":
    main()
