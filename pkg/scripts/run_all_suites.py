#!/usr/bin/env python3
"""Run all seven verification suites with one seed and print a combined report.

Usage: python scripts/run_all_suites.py [seed] [replicas]
"""

import sys
import time

from svprocess.cli import RunConfig
from svprocess import suites

SUITE_NAMES = ("moments", "harmonic", "hardy", "generator", "scaling", "lifetime", "neumann")


def run(seed: int = 1, replicas: int = 100_000) -> int:
    cfg = RunConfig(seed=seed, replicas=replicas)
    failures = 0
    for name in SUITE_NAMES:
        t0 = time.time()
        rows = getattr(suites, f"suite_{name}")(cfg)
        took = time.time() - t0
        n_fail = sum(not r.passed for r in rows)
        failures += n_fail
        print(f"== {name}: {len(rows) - n_fail}/{len(rows)} passed ({took:.1f}s)")
        for r in rows:
            mark = "PASS" if r.passed else "FAIL"
            print(f"   [{mark}] {r.claim}: {r.estimate:.6g} vs {r.target:.6g} (tol {r.tolerance:.3g})")
    print(f"\ntotal failures: {failures}")
    return 1 if failures else 0


if __name__ == "__main__":
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1
    replicas = int(sys.argv[2]) if len(sys.argv) > 2 else 100_000
    sys.exit(run(seed, replicas))
