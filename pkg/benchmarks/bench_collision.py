"""Compare the compiled collision core against the numpy fallback.

Times q_total on the reference-style mixture at a few grid sizes with
both backends (each in a fresh interpreter, since the default is fixed
at import) and prints a table with the speedup.  Run:

    python benchmarks/bench_collision.py [--n 16,24,32] [--K 16]
"""

import argparse
import json
import os
import subprocess
import sys

import numpy as np


def build_state(n, K):
    from mskinet import (SpeciesSet, SphereQuadrature, VelocityGrid,
                         make_kernel)
    from mskinet.solver import SimConfig, initial_state

    species = SpeciesSet.create([1.0, 1.5], [0, 0])
    kern = make_kernel("maxwell", c=1.0, b_const=1.0 / (2.0 * np.pi))
    grid = VelocityGrid(2, n, 6.0)
    squad = SphereQuadrature(2, K)
    cfg = SimConfig(
        species=species, kernels=kern, grid=grid, squad=squad,
        initial=[{"type": "gaussian",
                  "components": [{"weight": 1.0, "u": [0.9, 0.0], "T": 1.0}]},
                 {"type": "gaussian",
                  "components": [{"weight": 0.8, "u": [-0.5, -0.3],
                                  "T": 1.2}]}])
    return cfg, initial_state(cfg)


def time_backend(cfg, fs, repeats):
    import time

    from mskinet import q_total

    # warm the table cache so only the sweep is timed
    q_total(fs, cfg.species, cfg.kernels, cfg.grid, cfg.squad)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        q_total(fs, cfg.species, cfg.kernels, cfg.grid, cfg.squad)
        best = min(best, time.perf_counter() - t0)
    return best


def run_for_backend(backend, sizes, K, repeats):
    code = (
        "import json\n"
        "from bench_collision import build_state, time_backend\n"
        "rows = []\n"
        f"for n in {sizes!r}:\n"
        f"    cfg, fs = build_state(n, {K})\n"
        f"    rows.append((n, time_backend(cfg, fs, {repeats})))\n"
        "print(json.dumps(rows))\n"
    )
    env = dict(os.environ, MSKINET_BACKEND=backend,
               PYTHONPATH=os.path.dirname(os.path.abspath(__file__)))
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    return {int(n): float(t)
            for n, t in json.loads(out.stdout.strip().splitlines()[-1])}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", default="16,24,32")
    ap.add_argument("--K", type=int, default=16)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    sizes = [int(tok) for tok in args.n.split(",")]

    from mskinet._core import have_compiled
    if not have_compiled():
        print("compiled core unavailable; timing the fallback only")
        fallback = run_for_backend("python", sizes, args.K, args.repeats)
        for n in sizes:
            print(f"n={n:>3} K={args.K}: fallback {fallback[n]:.4f} s")
        return

    compiled = run_for_backend("compiled", sizes, args.K, args.repeats)
    fallback = run_for_backend("python", sizes, args.K, args.repeats)
    print(f"{'n':>4} {'K':>4} {'compiled [s]':>13} {'fallback [s]':>13} "
          f"{'speedup':>8}")
    for n in sizes:
        tc = compiled[n]
        tf = fallback[n]
        print(f"{n:>4} {args.K:>4} {tc:>13.4f} {tf:>13.4f} "
              f"{tf / tc:>8.1f}")


if __name__ == "__main__":
    main()
