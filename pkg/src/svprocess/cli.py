"""Command-line entry point: trajectory simulation and figure export,
verification suites, and constant tables, all reproducible from (config, seed).

Exit codes: 0 all checks passed, 1 at least one check failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (
    Alpha,
    generator_constant,
    hardy_constants,
    nu_halfline_mass,
    rho,
    stable_constant,
)
from .samplers import RngStream
from .walk import StepPolicy, export_trajectory_csv, render_trajectory_svg, simulate_trajectory

CSV_HEADER = f"# sv-process v{__version__} schema=1"

SUITES = ("moments", "harmonic", "hardy", "generator", "scaling", "neumann", "lifetime")


@dataclass
class RunConfig:
    """Fully serializable run configuration; TOML round-trips to identity."""

    alpha: float = 1.3
    x0: float = 1.0
    seed: int = 1
    replicas: int = 100_000
    t_max: float = 0.0  # 0 disables the time horizon
    n_reflections: int = 40
    lam: float = 1.0
    grid: str = "-0.5,-1,-2"
    tol: float = 1e-8
    c_step: float = 0.25
    eps_kill: float = 1e-4
    log_abs: bool = False
    output_dir: str = "out"

    def to_toml(self) -> str:
        lines = []
        for f_ in fields(self):
            v = getattr(self, f_.name)
            if isinstance(v, bool):
                lines.append(f"{f_.name} = {'true' if v else 'false'}")
            elif isinstance(v, (int, np.integer)):
                lines.append(f"{f_.name} = {int(v)}")
            elif isinstance(v, float):
                lines.append(f"{f_.name} = {v!r}")
            else:
                lines.append(f'{f_.name} = "{v}"')
        return "\n".join(lines) + "\n"

    @classmethod
    def from_toml(cls, text: str) -> "RunConfig":
        try:
            import tomllib  # Python 3.11+
        except ModuleNotFoundError:
            import tomli as tomllib
        data = tomllib.loads(text)
        known = {f_.name for f_ in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        for f_ in fields(cls):
            want = f_.type if isinstance(f_.type, type) else type(getattr(cls(), f_.name))
            got = getattr(cfg, f_.name)
            if isinstance(got, int) and want is float:
                setattr(cfg, f_.name, float(got))
        return cfg

    def grid_values(self) -> list[float]:
        return [float(tok) for tok in self.grid.split(",") if tok.strip()]

    def policy(self) -> StepPolicy:
        return StepPolicy(c_step=self.c_step, eps_kill=self.eps_kill)


def _apply_thread_cap() -> None:
    """SV_PROCESS_THREADS caps library-level parallelism.

    The command layer itself is single-threaded (replicas run as vectorized
    batches), so the cap is forwarded to the numeric backends.
    """
    raw = os.environ.get("SV_PROCESS_THREADS", "")
    try:
        cap = max(1, int(raw))
    except ValueError:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(cap))


def _load_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = RunConfig.from_toml(Path(args.config).read_text())
    overrides = {
        "alpha": args.alpha,
        "x0": args.x0,
        "seed": args.seed,
        "replicas": args.replicas,
        "t_max": args.t_max,
        "n_reflections": args.n_reflections,
        "lam": getattr(args, "lam", None),
        "grid": args.grid,
        "tol": args.tol,
        "output_dir": args.out,
        "log_abs": args.log_abs if getattr(args, "log_abs", False) else None,
    }
    for key, val in overrides.items():
        if val is not None:
            setattr(cfg, key, val)
    Alpha(cfg.alpha)  # validate early
    if cfg.x0 == 0.0:
        raise ValueError("x0 must avoid the origin")
    return cfg


def _write_resolved_config(cfg: RunConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.toml").write_text(cfg.to_toml())


def cmd_trajectory(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    _write_resolved_config(cfg, out)
    horizon = {}
    if cfg.t_max > 0:
        horizon["t_max"] = cfg.t_max
    else:
        horizon["n_reflections"] = cfg.n_reflections
    traj = simulate_trajectory(
        cfg.alpha, cfg.x0, cfg.policy(), RngStream(cfg.seed, 0), **horizon
    )
    export_trajectory_csv(traj, out / "trajectory.csv")
    render_trajectory_svg(traj, out / "trajectory.svg", log_abs=cfg.log_abs)
    for w in traj.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {out/'trajectory.csv'} and {out/'trajectory.svg'}")
    return 0


def cmd_constants(cfg: RunConfig) -> int:
    a = cfg.alpha
    rows = [
        ("jump_constant", stable_constant(a)),
        ("halfline_mass_at_-1", float(nu_halfline_mass(a, -1.0))),
        ("halfline_mass_at_+1", float(nu_halfline_mass(a, 1.0))),
        ("reflection_moment_rho", rho(a)),
    ]
    hc = hardy_constants(a)
    rows.append(("hardy_c", hc.c_alpha))
    rows.append(("hardy_d", hc.d_alpha))
    betas = (
        [0.0, (a - 1.0) / 4.0, (a - 1.0) / 2.0, 3.0 * (a - 1.0) / 4.0, a - 1.0]
        if a != 1.0
        else [0.0]
    )
    for b in betas:
        rows.append((f"decay_constant_D_beta={b:.15g}", generator_constant(a, b, "D")))
        rows.append((f"decay_constant_Dc_beta={b:.15g}", generator_constant(a, b, "Dc")))
    print(CSV_HEADER)
    print("name,value")
    for name, val in rows:
        print(f"{name},{val:.15g}")
    return 0


def cmd_verify(cfg: RunConfig, suite: str) -> int:
    from . import suites as suites_mod

    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    out = Path(cfg.output_dir)
    _write_resolved_config(cfg, out)
    runner = getattr(suites_mod, f"suite_{suite}")
    rows = runner(cfg)
    report_csv = out / f"verify_{suite}.csv"
    with report_csv.open("w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        writer = csv.writer(fh)
        writer.writerow(["claim", "claim_id", "estimate", "target", "tolerance", "status"])
        for r in rows:
            writer.writerow(
                [
                    r.claim,
                    r.claim_id,
                    repr(r.estimate),
                    repr(r.target),
                    repr(r.tolerance),
                    "pass" if r.passed else "fail",
                ]
            )
    report_md = out / f"verify_{suite}.md"
    with report_md.open("w") as fh:
        fh.write(f"# verification suite: {suite}\n\n")
        fh.write("| claim | estimate | target | tolerance | status |\n")
        fh.write("|---|---|---|---|---|\n")
        for r in rows:
            fh.write(
                f"| {r.claim} | {r.estimate:.6g} | {r.target:.6g} | {r.tolerance:.3g} "
                f"| {'pass' if r.passed else 'FAIL'} |\n"
            )
    n_fail = sum(not r.passed for r in rows)
    for r in rows:
        mark = "PASS" if r.passed else "FAIL"
        print(f"[{mark}] {r.claim}: estimate={r.estimate:.6g} target={r.target:.6g} tol={r.tolerance:.3g}")
    print(f"report: {report_csv}")
    return 0 if n_fail == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sv-process",
        description="Reflected stable process: simulation and verification toolkit",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--x0", type=float, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--replicas", type=int, default=None)
        sp.add_argument("--t-max", dest="t_max", type=float, default=None)
        sp.add_argument("--n-reflections", dest="n_reflections", type=int, default=None)
        sp.add_argument("--lambda", dest="lam", type=float, default=None)
        sp.add_argument("--grid", type=str, default=None)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--config", type=str, default=None)

    sp_t = sub.add_parser("trajectory", help="simulate one path, write CSV and SVG")
    common(sp_t)
    sp_t.add_argument("--log-abs", dest="log_abs", action="store_true")

    sp_v = sub.add_parser("verify", help="run a named verification suite")
    sp_v.add_argument("suite", choices=SUITES)
    common(sp_v)

    sp_c = sub.add_parser("constants", help="print the closed-form constant table")
    common(sp_c)
    return p


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses its own exit codes
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = _load_config(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "trajectory":
            if not hasattr(args, "log_abs"):
                args.log_abs = False
            return cmd_trajectory(cfg)
        if args.command == "constants":
            return cmd_constants(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.suite)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
