#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times the three hot kernels on realistic workloads plus one end-to-end
identity (tree growth through augmented samples) per backend. The backends
are bit-identical; this script quantifies what the compiled core buys.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from veintree.kernels import _fallback

try:
    from veintree.kernels import _native
except ImportError:
    _native = None


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_nearest_segment(backend, rng):
    a = rng.uniform(0, 70, size=(160, 3))
    b = a + rng.uniform(-8, 8, size=(160, 3))
    points = rng.uniform(0, 70, size=(2000, 3))

    def run():
        for p in points:
            backend.nearest_segment(a, b, p)

    return run


def bench_simulate_steps(backend, rng):
    pairs = rng.uniform([5, 34, 5], [65, 46, 75], size=(300, 2, 3))
    normals = rng.standard_normal((300, 600, 3))
    lo = np.array([0.0, 33.0, 0.0])
    hi = np.array([70.0, 47.0, 80.0])
    out = np.empty((600, 3))

    def run():
        for i in range(300):
            backend.simulate_steps(
                pairs[i, 0], pairs[i, 1], 0.5, 0.35, 0.5, 600,
                normals[i], lo, hi, out,
            )

    return run


def bench_draw_strokes(backend, rng):
    m = 12000
    strokes = np.empty((m, 7))
    strokes[:, 0] = rng.uniform(0, 128, m)
    strokes[:, 1] = rng.uniform(0, 128, m)
    strokes[:, 2] = strokes[:, 0] + rng.uniform(-1, 1, m)
    strokes[:, 3] = strokes[:, 1] + rng.uniform(-1, 1, m)
    strokes[:, 4] = rng.uniform(0, 255, m)
    strokes[:, 5] = rng.uniform(0, 255, m)
    strokes[:, 6] = rng.uniform(0.7, 2.0, m)
    canvas = np.full((128, 128), 255, dtype=np.uint8)

    def run():
        backend.draw_strokes(canvas, strokes)

    return run


def bench_end_to_end() -> dict[str, float]:
    """One identity (7 samples) in a subprocess per backend."""
    code = (
        "import time\n"
        "from veintree.config import GenerationConfig\n"
        "from veintree.pipeline import generate_identity\n"
        "cfg = GenerationConfig(seed=3, n_identities=1)\n"
        "generate_identity(0, cfg)\n"
        "t = time.perf_counter()\n"
        "generate_identity(1, cfg)\n"
        "print(time.perf_counter() - t)\n"
    )
    results = {}
    for name, env_value in (("native", "0"), ("python", "1")):
        if name == "native" and _native is None:
            continue
        env = dict(os.environ, VEINTREE_PURE_PYTHON=env_value)
        out = subprocess.run(
            [sys.executable, "-c", code], env=env, capture_output=True, text=True,
            check=True,
        )
        results[name] = float(out.stdout.strip())
    return results


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = {"python": _fallback}
    if _native is not None:
        backends["native"] = _native
    else:
        print("compiled backend unavailable; benchmarking the fallback only")

    cases = {
        "nearest_segment (2000 queries x 160 segs)": bench_nearest_segment,
        "simulate_steps  (300 walks x <=600 steps)": bench_simulate_steps,
        "draw_strokes    (12k strokes on 128x128) ": bench_draw_strokes,
    }
    print(f"{'kernel':<44} " + " ".join(f"{n:>10}" for n in backends) + "   speedup")
    for label, factory in cases.items():
        times = {}
        for name, backend in backends.items():
            run = factory(backend, np.random.default_rng(0))
            times[name] = timeit(run, args.repeat)
        row = " ".join(f"{times[n] * 1e3:9.1f}ms" for n in backends)
        speedup = (
            f"{times['python'] / times['native']:8.1f}x" if "native" in times else ""
        )
        print(f"{label:<44} {row} {speedup}")

    print("\nend-to-end, one identity (7 samples):")
    for name, seconds in bench_end_to_end().items():
        print(f"  {name:>7}: {seconds * 1e3:8.1f} ms")
    return 0


if __name__ == "__main__":
    sys.exit(main())
