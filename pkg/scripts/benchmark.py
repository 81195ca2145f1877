#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel on identical inputs under both backends, then times
the full wall-extraction pipeline in subprocesses with PLANVEC_BACKEND
forced, so backend selection happens exactly as it would for a user.

Usage: python3 scripts/benchmark.py [--size 512] [--repeats 5]
"""

import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np


def _time(fn, repeats):
    # one warm-up call so numba JIT compilation is not measured
    fn()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def bench_kernels(size, repeats):
    from planvec import _kernels_np as knp
    from planvec import _kernels_nb as knb
    from planvec import raster

    rng = np.random.default_rng(0)
    mask = np.ascontiguousarray(rng.random((size, size)) < 0.3)
    ys, xs = np.nonzero(mask)
    xs = xs.astype(np.int64)
    ys = ys.astype(np.int64)
    thetas = np.deg2rad(np.arange(0.0, 180.0, 1.0))
    cos_t, sin_t = np.cos(thetas), np.sin(thetas)
    diag = float(np.hypot(size, size))
    amap = raster.rotation_map(size, size, 30.0)
    out_w, out_h = amap.out_size
    strong = np.ascontiguousarray(rng.random((size, size)) < 0.01)
    weak = np.ascontiguousarray((rng.random((size, size)) < 0.1) & ~strong)

    cases = [
        ("erode 3x3", lambda k: k.erode(mask, 3, 3)),
        ("dilate 3x3", lambda k: k.dilate(mask, 3, 3)),
        ("erode 1x11", lambda k: k.erode(mask, 1, 11)),
        ("hough", lambda k: k.hough_accumulate(xs, ys, cos_t, sin_t,
                                               1.0, diag)),
        ("rotate 30deg", lambda k: k.rotate_nn(mask, amap.inverse,
                                               out_h, out_w)),
        ("label8", lambda k: k.label8(mask)),
        ("hysteresis", lambda k: k.hysteresis(strong, weak)),
    ]
    print(f"kernel benchmarks ({size}x{size}, median of {repeats}):")
    print(f"{'kernel':<14} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, call in cases:
        t_np = _time(lambda: call(knp), repeats)
        t_nb = _time(lambda: call(knb), repeats)
        print(f"{name:<14} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms "
              f"{t_np / t_nb:>7.1f}x")


def bench_pipeline(size, repeats):
    code = (
        "import time\n"
        "from planvec import planio\n"
        "from planvec.extraction import extract_walls\n"
        "mask, _, _ = planio.synth_plan(planio.SynthSpec(\n"
        f"    seed=0, canvas=({size}, {size}),\n"
        "    noise_speckle_density=0.002, hole_density=0.01))\n"
        "extract_walls(mask)  # warm-up (JIT compile)\n"
        "samples = []\n"
        f"for _ in range({repeats}):\n"
        "    t0 = time.perf_counter()\n"
        "    extract_walls(mask)\n"
        "    samples.append(time.perf_counter() - t0)\n"
        "samples.sort()\n"
        "print(samples[len(samples) // 2])\n"
    )
    results = {}
    for backend in ("numpy", "numba"):
        env = dict(os.environ, PLANVEC_BACKEND=backend)
        r = subprocess.run([sys.executable, "-c", code], env=env,
                           capture_output=True, text=True)
        if r.returncode != 0:
            print(f"pipeline ({backend}): FAILED\n{r.stderr}", file=sys.stderr)
            return
        results[backend] = float(r.stdout.strip())
    print(f"\nfull extract_walls pipeline ({size}x{size}, "
          f"median of {repeats}):")
    print(f"{'numpy':>10} {'numba':>10} {'speedup':>8}")
    print(f"{results['numpy'] * 1e3:>8.0f}ms {results['numba'] * 1e3:>8.0f}ms "
          f"{results['numpy'] / results['numba']:>7.1f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=512)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    bench_kernels(args.size, args.repeats)
    bench_pipeline(args.size, args.repeats)


if __name__ == "__main__":
    main()
