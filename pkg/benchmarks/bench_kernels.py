"""Compare the compiled integration kernel against the numpy fallback.

Runs the same stationary-oscillator sampling workload through both kernel
lanes (selected per subprocess via STOCHMECH_KERNEL), checks the trajectory
binaries are bit-identical, and reports path-step throughput.

Usage: python3 benchmarks/bench_kernels.py [--paths N] [--steps N]
"""

import argparse
import hashlib
import json
import os
import subprocess
import sys
import tempfile
import textwrap
from pathlib import Path

WORKER = textwrap.dedent("""
    import json, sys, time
    import numpy as np
    from stochmech import (PhysicalParams, SdeConfig, build_grid,
                           make_stationary_fields, sample_forward)
    from stochmech._kernels import KERNEL_LANE

    n_paths, n_steps, out_path = int(sys.argv[1]), int(sys.argv[2]), sys.argv[3]
    params = PhysicalParams()
    dt = 1e-3
    grid = build_grid(-8.0, 8.0, 1601, dt)
    xs = grid.points
    rho = np.exp(-xs * xs)
    rho /= np.trapezoid(rho, xs)
    fields = make_stationary_fields(grid, np.zeros(xs.size), -xs, rho,
                                    horizon=n_steps * dt)
    config = SdeConfig(dt_sde=dt, n_paths=n_paths, seed=20260814,
                       record_every=max(1, n_steps // 50))
    t0 = time.perf_counter()
    ensemble = sample_forward(fields, config, params)
    elapsed = time.perf_counter() - t0
    np.save(out_path, ensemble.paths)
    print(json.dumps({"lane": KERNEL_LANE, "seconds": elapsed,
                      "path_steps": n_paths * n_steps}))
""")


def run_lane(lane: str, n_paths: int, n_steps: int, out_path: Path) -> dict:
    env = dict(os.environ, STOCHMECH_KERNEL=lane)
    proc = subprocess.run(
        [sys.executable, "-c", WORKER, str(n_paths), str(n_steps), str(out_path)],
        env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--paths", type=int, default=4000)
    parser.add_argument("--steps", type=int, default=5000)
    args = parser.parse_args()

    results = {}
    digests = {}
    with tempfile.TemporaryDirectory() as tmp:
        for lane in ("compiled", "fallback"):
            out = Path(tmp) / f"{lane}.npy"
            try:
                results[lane] = run_lane(lane, args.paths, args.steps, out)
            except subprocess.CalledProcessError as exc:
                print(f"{lane:>9}: unavailable ({exc.stderr.strip().splitlines()[-1]})")
                continue
            digests[lane] = hashlib.sha256(out.read_bytes()).hexdigest()

    for lane, r in results.items():
        rate = r["path_steps"] / r["seconds"] / 1e6
        print(f"{lane:>9}: {r['seconds']:8.3f} s  "
              f"({rate:7.1f} M path-steps/s, lane reported: {r['lane']})")

    if len(results) == 2:
        speedup = results["fallback"]["seconds"] / results["compiled"]["seconds"]
        identical = digests["compiled"] == digests["fallback"]
        print(f"\nspeedup: {speedup:.1f}x  |  outputs bit-identical: {identical}")
        if not identical:
            print("ERROR: kernel lanes disagree", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
