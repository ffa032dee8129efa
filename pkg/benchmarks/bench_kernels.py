"""Benchmark: compiled kernels vs the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--runs N]

Times the individual hot kernels on synthetic workloads, then a full
bundled-scenario run under each implementation, and prints speedups. Both
paths produce bit-identical results (asserted here on the trace digest).
"""

import argparse
import hashlib
import time

import numpy as np

from dtss import _pykernels as pk

try:
    from dtss import _ext as ck
except ImportError:
    ck = None


def bench(label, fn, n_iter=5):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(n_iter):
        fn()
    return (time.perf_counter() - t0) / n_iter


def kernel_benchmarks(impl):
    rng = np.random.default_rng(7)
    n = 20_000
    out = np.zeros(n)
    xs = rng.uniform(0, 200, 300)
    ys = rng.uniform(0, 200, 300)
    poly_x = np.array([0.0, 120.0, 150.0, 60.0, 10.0])
    poly_y = np.array([0.0, 10.0, 130.0, 170.0, 80.0])
    ts = np.cumsum(rng.integers(500, 1500, 1200)).astype(np.int64)
    lx = np.cumsum(rng.normal(0, 0.8, 1200))
    ly = np.cumsum(rng.normal(0, 0.8, 1200))
    keys = rng.integers(0, 2**63, 64, dtype=np.uint64)
    ctrs = np.zeros(64, dtype=np.int64)
    cx = rng.uniform(0, 100, 64)
    cy = rng.uniform(0, 60, 64)
    tx = rng.uniform(0, 100, 64)
    ty = rng.uniform(0, 60, 64)
    active = np.ones(300, dtype=np.uint8)
    e = np.zeros(300, dtype=np.uint8)
    ox = np.zeros(300)
    oy = np.zeros(300)
    oz = np.zeros(300)
    tz = np.zeros(300)

    return {
        "fill_u01 (20k draws)": lambda: impl.fill_u01(12345, 0, out),
        "point_in_polygon (300 pts)": lambda: [
            impl.point_in_polygon(float(x), float(y), poly_x, poly_y)
            for x, y in zip(xs, ys)],
        "pairs_within (300 pts)": lambda: impl.pairs_within(xs, ys, 15.0),
        "count_within (300 pts)": lambda: impl.count_within(xs, ys, 100.0, 100.0, 40.0),
        "loiter_windows (1200 samples)": lambda: impl.loiter_windows(
            ts, lx, ly, 5.0, 60_000),
        "crowd_step (64 walkers x 100)": lambda: [
            impl.crowd_step(cx, cy, tx, ty, keys, ctrs, 1.3, 0.5, 0, 0, 100, 60)
            for _ in range(100)],
        "sense_step (300 targets x 50)": lambda: [
            impl.sense_step(np.resize(keys, 300), t, xs, ys, tz, active,
                            100.0, 100.0, 60.0, 0.7, 0.5, e, ox, oy, oz)
            for t in range(50)],
    }


_SCENARIO_SNIPPET = """
import hashlib, time
from dtss.engine import CompiledScenario, trace_to_bytes
from dtss.scenario import load_bundled
compiled = CompiledScenario(load_bundled("metro_bomb"))
compiled.run(0)  # warm up
t0 = time.perf_counter()
digest = None
for seed in range({n_runs}):
    blob = trace_to_bytes(compiled.run(seed))
    if seed == 0:
        digest = hashlib.sha256(blob).hexdigest()
print((time.perf_counter() - t0) / {n_runs}, digest)
"""


def scenario_benchmark(n_runs):
    import os
    import subprocess
    import sys

    results = {}
    for mode in ("cython", "python"):
        env = dict(os.environ, DTSS_PURE_PY="1" if mode == "python" else "0")
        out = subprocess.run(
            [sys.executable, "-c", _SCENARIO_SNIPPET.format(n_runs=n_runs)],
            env=env, capture_output=True, text=True, check=True)
        secs, digest = out.stdout.split()
        results[mode] = (float(secs), digest)
    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--runs", type=int, default=5,
                        help="scenario runs per implementation")
    args = parser.parse_args()

    if ck is None:
        print("compiled extension not available; nothing to compare")
        return

    print(f"{'kernel':<34}{'cython':>12}{'python':>12}{'speedup':>10}")
    cy = kernel_benchmarks(ck)
    py = kernel_benchmarks(pk)
    for label in cy:
        t_c = bench(label, cy[label])
        t_p = bench(label, py[label])
        print(f"{label:<34}{t_c * 1e3:>10.2f}ms{t_p * 1e3:>10.2f}ms"
              f"{t_p / t_c:>9.1f}x")

    print("\nfull scenario run (metro_bomb):")
    results = scenario_benchmark(args.runs)
    t_c, d_c = results["cython"]
    t_p, d_p = results["python"]
    print(f"{'cython':<12}{t_c * 1e3:>10.1f} ms/run")
    print(f"{'python':<12}{t_p * 1e3:>10.1f} ms/run   ({t_p / t_c:.1f}x slower)")
    assert d_c == d_p, "implementations diverged!"
    print(f"trace digests identical across implementations: {d_c[:16]}...")


if __name__ == "__main__":
    main()
