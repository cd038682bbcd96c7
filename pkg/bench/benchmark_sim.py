"""Benchmark the compiled Monte Carlo kernel against the pure Python one.

Usage: python bench/benchmark_sim.py [--replicates N] [--workers K]

Runs the bundled supercritical two-state model to a fixed horizon with both
backends, checks that the results are bit-identical, and reports the
speedup.
"""

import argparse
import time
from importlib import resources

from catbranch.model import load_model
from catbranch.sim import HAVE_COMPILED, SimConfig, run_replicates


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--replicates", type=int, default=20000)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    config_text = resources.files("catbranch.configs").joinpath(
        "two_state.json").read_text()
    model = load_model(config_text)
    cfg = SimConfig(start="w", horizon=8.0, sample_times=(0.5, 2.0, 8.0),
                    replicates=args.replicates, seed=2024)

    if not HAVE_COMPILED:
        print("compiled kernel unavailable; timing the pure backend only")

    timings = {}
    results = {}
    backends = ["pure"] + (["compiled"] if HAVE_COMPILED else [])
    for backend in backends:
        t0 = time.perf_counter()
        _, snaps, totals, net, trunc = run_replicates(
            model, cfg, workers=args.workers, force_pure=(backend == "pure"))
        timings[backend] = time.perf_counter() - t0
        results[backend] = (snaps, totals, net)
        rate = args.replicates / timings[backend]
        print(f"{backend:>9}: {timings[backend]:8.2f} s "
              f"({rate:10.0f} replicates/s)")

    if HAVE_COMPILED:
        same = all((a == b).all() for a, b in zip(results["pure"],
                                                 results["compiled"]))
        print(f"bit-identical: {same}")
        print(f"speedup: {timings['pure'] / timings['compiled']:.1f}x")


if __name__ == "__main__":
    main()
