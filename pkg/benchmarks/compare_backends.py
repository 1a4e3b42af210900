#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times the three hot inner-loop operations (banded kernel apply, PDE stencil
step, agent-event resolution) at suite scale and full scale, then one whole
solver run per backend.

    python benchmarks/compare_backends.py [--repeat 200]
"""
import argparse
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from phenokinetics import MutationKernel, desk_profile  # noqa: E402
from phenokinetics.backends import available_backends  # noqa: E402
from phenokinetics.ide import build_kernel_band  # noqa: E402


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def benchmark_cases(repeat):
    rng = np.random.default_rng(0)
    backends = available_backends()
    rows = []
    for label, n, dv in (("suite grid (n=601)", 601, 0.05), ("full grid (n=1201)", 1201, 0.025)):
        grid_cfg = desk_profile(dv=dv)
        band = build_kernel_band(grid_cfg.grid(), MutationKernel(0.3, 0.4, 1.0))
        fw = rng.random(n)
        rows.append((f"kernel_apply, {label}, band {band.width}",
                     {name: best_of(lambda impl=impl: impl.kernel_apply(band.values_rev, band.offset_lo, fw),
                                    repeat)
                      for name, impl in backends.items()}))
        g = rng.random(n)
        rv = rng.random(n) - 0.5
        rows.append((f"pde_step, {label}",
                     {name: best_of(lambda impl=impl: impl.pde_step(g, rv, 0.4, 0.3, 0.4, 1e-3, dv, True),
                                    repeat)
                      for name, impl in backends.items()}))
    for label, n in (("N=1e4 agents", 10_000), ("N=1e5 agents", 100_000)):
        comp = (rng.random(n) < 0.4).astype(np.uint8)
        phen = rng.normal(0.0, 1.0, n)
        partner = rng.integers(0, n, n).astype(np.int64)
        u1, u2, u3 = rng.random(n), rng.random(n), rng.random(n)
        z = rng.standard_normal(n)
        dp = rng.random(n) * 0.01
        rows.append((f"abm_resolve, {label}",
                     {name: best_of(lambda impl=impl: impl.abm_resolve(
                         comp, phen, partner, u1, u2, u3, z, 0.005, dp, 0.01, 0.003, 0.06, 0.0),
                         max(repeat // 4, 5))
                      for name, impl in backends.items()}))
    return rows


def benchmark_runs():
    import phenokinetics.backends as bk
    from phenokinetics.abm import abm_run
    from phenokinetics.ide import ide_run

    backends = available_backends()
    cfg_ide = desk_profile(alpha=0.3, epsilon=10 ** -0.5, t_final=2.0)
    cfg_abm = desk_profile(alpha=0.3, t_final=1.0, seed=1)
    rows = []
    saved = (bk.kernel_apply, bk.pde_step, bk.abm_resolve)
    try:
        for tag, cfg, runner in (("ide_run (2 time units)", cfg_ide, ide_run),
                                 ("abm_run (1 time unit)", cfg_abm, abm_run)):
            timings = {}
            for name, impl in backends.items():
                bk.kernel_apply, bk.pde_step, bk.abm_resolve = (
                    impl.kernel_apply, impl.pde_step, impl.abm_resolve)
                start = time.perf_counter()
                runner(cfg)
                timings[name] = time.perf_counter() - start
            rows.append((tag, timings))
    finally:
        bk.kernel_apply, bk.pde_step, bk.abm_resolve = saved
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends available: {', '.join(sorted(backends))}")
    if "compiled" not in backends:
        print("note: compiled extension not built; run "
              "`python setup.py build_ext --inplace` to compare both")

    rows = benchmark_cases(args.repeat) + benchmark_runs()
    names = sorted(backends)
    header = f"{'operation':<42}" + "".join(f"{n:>14}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, timings in rows:
        line = f"{label:<42}" + "".join(f"{timings[n] * 1e3:>12.3f}ms" for n in names)
        if len(names) == 2:
            line += f"{timings['python'] / timings['compiled']:>9.2f}x"
        print(line)


if __name__ == "__main__":
    main()
