#!/usr/bin/env python3
"""Regenerate the three regime figures: absorbed (alpha=1.3), oscillating
(alpha=1.0), escaping (alpha=0.9), each as CSV + SVG under out/figures/."""

import sys
from pathlib import Path

from svprocess.cli import main

OUT = Path("out/figures")

RUNS = [
    # (name, args)
    ("absorbed_a13", ["--alpha", "1.3", "--x0", "1", "--seed", "12", "--n-reflections", "60"]),
    ("absorbed_a13_zoom", ["--alpha", "1.3", "--x0", "1", "--seed", "12", "--n-reflections", "60", "--log-abs"]),
    ("oscillating_a10", ["--alpha", "1.0", "--x0", "1", "--seed", "3", "--t-max", "200"]),
    ("escaping_a09", ["--alpha", "0.9", "--x0", "1", "--seed", "5", "--t-max", "1000"]),
]


def run() -> int:
    rc_total = 0
    for name, args in RUNS:
        out = OUT / name
        rc = main(["trajectory", *args, "--out", str(out)])
        print(f"{name}: exit {rc} -> {out}")
        rc_total |= rc
    return rc_total


if __name__ == "__main__":
    sys.exit(run())
