"""Monte Carlo Green operator and resolvent, characteristic-operator probes,
and end-to-end verification of the nonlocal Neumann problem.

The Green estimator accumulates the time integral of f along simulated paths
(expected-hold weighting on the negative side, trapezoid weighting along walk
steps).  Probes at interior points use exact ball-exit draws and the closed
form for the mean ball-exit time, so the only Monte Carlo error is in the
evaluation of the probed function.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__ as _pkg_version
from .analytic import as_alpha, ball_exit_time_mean, nu_halfline_mass
from .quadrature import nonlocal_normal_derivative, normal_derivative_weights
from .samplers import RngStream, _as_generator
from .stats import EstimateCI, mean_ci
from .testfunctions import TableFunction, bump_components
from .walk import StepPolicy, _run_bundled

__all__ = [
    "PotentialEstimate",
    "green_apply",
    "lambda_potential",
    "sample_ball_exit",
    "dynkin_probe",
    "dynkin_probe_green",
    "flux_residual_one_step",
    "resolvent_residual",
    "verify_neumann",
    "NeumannReport",
    "export_residual_csv",
]

CSV_HEADER = f"# sv-process v{_pkg_version} schema=1"


@dataclass(frozen=True)
class PotentialEstimate:
    """Monte Carlo estimate of a potential-operator value at one point."""

    x: float
    value: EstimateCI
    lam: float
    truncation_bound: float

    def __post_init__(self):
        if self.lam < 0.0:
            raise ValueError("discount rate must be nonnegative")


def _f_scale(f) -> tuple[float, float]:
    """(sup norm, outer support radius) of a bump-type integrand."""
    comps = bump_components(f)
    sup = sum(abs(b.amplitude) for b in comps)
    r_out = max(max(abs(b.support[0]), abs(b.support[1])) for b in comps)
    return sup, r_out


def _green_stop_rule(alpha: float, f, policy: StepPolicy):
    """Truncation rule for the undiscounted time integral.

    The remaining contribution from a return position v is bounded by a
    power of v (decay toward the origin above the critical index, decay at
    infinity below it); the prefactor is a conservative scale built from the
    sup norm of f and the mean holding time at the edge of its support.
    """
    a = alpha
    sup, r_out = _f_scale(f)
    hold_scale = 1.0 / float(nu_halfline_mass(a, -r_out))
    scale0 = sup * hold_scale
    coef = 10.0 * scale0
    if a > 1.0:
        expo = 0.9 * (a - 1.0)

        def rule(ret_pos, acc, t):
            bnd = coef * (ret_pos / r_out) ** expo
            return bnd <= 1e-3 * (np.abs(acc) + 0.1 * scale0), bnd

    else:
        expo = 0.9 * (1.0 - a)

        def rule(ret_pos, acc, t):
            bnd = np.where(
                ret_pos > r_out, coef * (r_out / ret_pos) ** expo, np.inf
            )
            return bnd <= 1e-3 * (np.abs(acc) + 0.1 * scale0), bnd

    return rule


def green_apply(
    alpha,
    f,
    x: float,
    replicas: int,
    policy: StepPolicy,
    stream: RngStream,
    *,
    skip_initial_hold: bool = False,
) -> PotentialEstimate:
    """Estimate of the total time integral of f along the path from x.

    Defined away from the critical index for f supported away from the
    origin.  skip_initial_hold drops the contribution of the starting hold
    when x < 0, which estimates the expected value of the Green function at
    the first return position (the one-step decomposition).
    """
    a = as_alpha(alpha).value
    if a == 1.0:
        raise ValueError("the undiscounted potential diverges at the critical index")
    comps = bump_components(f)
    if not all(b.avoids_origin() for b in comps):
        raise ValueError("integrand support must avoid the origin")
    if x == 0.0:
        raise ValueError("start must avoid the origin")
    rule = _green_stop_rule(a, f, policy)
    starts = np.full((replicas, 1), float(x))
    (pos, alive, acc, t, nrefl, bound), _ = _run_bundled(
        a,
        starts,
        policy,
        stream,
        dict(f=f, lam=0.0, stop_rule=rule, skip_initial_hold=skip_initial_hold),
    )
    est = mean_ci(acc[:, 0], seed=stream.seed, stream_lo=stream.stream_id)
    return PotentialEstimate(
        x=float(x), value=est, lam=0.0, truncation_bound=float(np.max(bound))
    )


def lambda_potential(
    alpha,
    f,
    lam: float,
    x: float,
    replicas: int,
    policy: StepPolicy,
    stream: RngStream,
    *,
    sup_norm: float | None = None,
) -> PotentialEstimate:
    """Estimate of the discounted time integral with rate lam > 0.

    Hold contributions use the exact conditional discount.  Paths stop at
    the fixed horizon 40/lam, beyond which the remaining discounted mass is
    bounded by exp(-40) times the sup-norm scale (reported as the
    truncation bound).
    """
    a = as_alpha(alpha).value
    if lam <= 0.0:
        raise ValueError("discount rate must be positive")
    if x == 0.0:
        raise ValueError("start must avoid the origin")
    if sup_norm is None:
        sup_norm, _ = _f_scale(f)
    starts = np.full((replicas, 1), float(x))
    horizon = 40.0 / lam
    eps = None
    if a > 1.0:
        eps = np.full((replicas, 1), policy.eps_kill * abs(x))
    (pos, alive, acc, t, nrefl, bound), _ = _run_bundled(
        a,
        starts,
        policy,
        stream,
        dict(f=f, lam=lam, horizon=horizon, eps_abs=eps),
    )
    est = mean_ci(acc[:, 0], seed=stream.seed, stream_lo=stream.stream_id)
    trunc = sup_norm / lam * math.exp(-lam * horizon)
    return PotentialEstimate(x=float(x), value=est, lam=lam, truncation_bound=trunc)


def sample_ball_exit(alpha, x: float, r: float, rng, size=None):
    """Exact draw of the exit position from the ball of radius r around x.

    The start sits at the center, so the exit offset is r / sqrt(Z) with a
    Beta(alpha/2, 1 - alpha/2) variable Z and a symmetric sign.
    """
    a = as_alpha(alpha).value
    g = _as_generator(rng)
    if r <= 0.0:
        raise ValueError("radius must be positive")
    n = 1 if size is None else int(size)
    z = g.beta(a / 2.0, 1.0 - a / 2.0, size=n)
    v = 1.0 / np.sqrt(z)
    sign = np.where(g.random(n) < 0.5, 1.0, -1.0)
    out = x + r * sign * v
    return float(out[0]) if size is None else out


def dynkin_probe(alpha, u, x: float, r: float, replicas: int, rng) -> EstimateCI:
    """Characteristic-operator probe at x != 0 with ball radius r < |x|.

    For x > 0: Monte Carlo average of u at exact ball-exit draws against the
    closed-form mean exit time.  For x < 0 the probe is the negative flux
    functional, evaluated in closed form (no Monte Carlo error).
    """
    a = as_alpha(alpha).value
    if r >= abs(x) or r <= 0.0:
        raise ValueError("ball must avoid the origin: need 0 < r < |x|")
    if x < 0.0:
        val = -nonlocal_normal_derivative(a, u, x)
        return EstimateCI(mean=val, se=0.0, n=1)
    g = _as_generator(rng)
    exits = sample_ball_exit(a, x, r, g, size=replicas)
    vals = np.asarray(u(exits), dtype=float)
    tau_mean = ball_exit_time_mean(a, r)
    est = mean_ci((vals - float(u(x))) / tau_mean)
    return est


def dynkin_probe_green(
    alpha,
    f,
    x: float,
    r: float,
    pairs: int,
    policy: StepPolicy,
    stream: RngStream,
) -> EstimateCI:
    """Probe of the Green potential at x > 0 without evaluating it on a grid.

    Each pair draws one exact ball-exit point y and runs two potential paths
    with shared randomness, one from y and one from x; the paired difference
    estimates (mean of Gf at exit) - Gf(x) unbiasedly, divided by the closed
    form mean exit time.  The tower property replaces the inner expectation
    by a single path per exit draw.
    """
    a = as_alpha(alpha).value
    if x <= 0.0 or r >= x or r <= 0.0:
        raise ValueError("probe needs 0 < r < x")
    g = stream.derive(999_983).generator()
    ys = sample_ball_exit(a, x, r, g, size=pairs)
    rule = _green_stop_rule(a, f, policy)
    starts = np.empty((pairs, 2))
    starts[:, 0] = ys
    starts[:, 1] = x
    (pos, alive, acc, t, nrefl, bound), _ = _run_bundled(
        a,
        starts,
        policy,
        stream,
        dict(f=f, lam=0.0, stop_rule=rule),
        pair=2,
    )
    diffs = acc[:, 0] - acc[:, 1]
    tau_mean = ball_exit_time_mean(a, r)
    return mean_ci(diffs / tau_mean, seed=stream.seed, stream_lo=stream.stream_id)


def flux_residual_one_step(
    alpha,
    f,
    x: float,
    replicas: int,
    policy: StepPolicy,
    stream: RngStream,
) -> tuple[float, float, EstimateCI]:
    """Residual of the flux equation at x < 0 via the one-step identity.

    The flux of the Green potential at x equals
    nu(x, D) (Gf(x) - E[Gf(first return)]), with the two expectations
    estimated from independent streams; returns (residual, se, Gf(x)).
    """
    a = as_alpha(alpha).value
    if x >= 0.0:
        raise ValueError("flux residual lives on the negative half-line")
    u_here = green_apply(a, f, x, replicas, policy, stream)
    u_next = green_apply(
        a, f, x, replicas, policy, stream.derive(500_009), skip_initial_hold=True
    )
    rate = float(nu_halfline_mass(a, x))
    residual = rate * (u_here.value.mean - u_next.value.mean) - float(f(x))
    se = rate * math.hypot(u_here.value.se, u_next.value.se)
    return residual, se, u_here.value


def resolvent_residual(
    alpha,
    f,
    lam: float,
    x: float,
    replicas: int,
    policy: StepPolicy,
    stream: RngStream,
    *,
    grid=None,
    grid_replicas: int | None = None,
) -> dict:
    """Residual of lam*u + flux(u) - f at x < 0 for u the lam-potential.

    u is estimated at x and on a grid over the positive half-line
    (independent streams per node); the flux integral is a fixed linear
    functional of the grid values, so the joint standard error is exact.
    """
    a = as_alpha(alpha).value
    if x >= 0.0:
        raise ValueError("the flux form of the residual lives on x < 0")
    if grid is None:
        grid = np.geomspace(1e-2, 2e2, 49)
    if grid_replicas is None:
        grid_replicas = max(2000, replicas // 8)
    u_x = lambda_potential(a, f, lam, x, replicas, policy, stream)
    means = np.empty(grid.size)
    ses = np.empty(grid.size)
    for i, y in enumerate(grid):
        est = lambda_potential(
            a, f, lam, float(y), grid_replicas, policy, stream.derive(1000 + i)
        )
        means[i] = est.value.mean
        ses[i] = est.value.se
    table = TableFunction(grid, means, log_spacing=True)
    w = normal_derivative_weights(a, x, table)
    rate = float(nu_halfline_mass(a, x))
    flux = rate * u_x.value.mean - float(np.dot(w, means))
    residual = lam * u_x.value.mean + flux - float(f(x))
    se = math.sqrt(
        ((lam + rate) * u_x.value.se) ** 2 + float(np.dot(w * w, ses * ses))
    )
    return {
        "residual": residual,
        "se": se,
        "u_x": u_x,
        "table": table,
        "bound": _f_scale(f)[0] / lam,
    }


@dataclass
class NeumannReport:
    """Per-point residual rows of the two-sided verification."""

    rows: list  # dicts with x, u_hat, se_u, residual, se_residual, status

    def max_abs_residual(self, side: str | None = None) -> float:
        rows = [r for r in self.rows if side is None or r["side"] == side]
        return max(abs(r["residual"]) for r in rows)

    def all_conclusive(self) -> bool:
        return all(r["status"] != "inconclusive" for r in self.rows)


def verify_neumann(
    alpha,
    f,
    grid_neg,
    grid_pos,
    replicas: int,
    policy: StepPolicy,
    stream: RngStream,
    *,
    probe_radii=(0.2, 0.1, 0.05),
    pairs: int | None = None,
) -> NeumannReport:
    """End-to-end check that the Green potential solves the two-sided problem.

    Negative grid points use the one-step flux identity; positive grid
    points use the paired probe at the smallest radius whose standard error
    resolves the local f scale (larger radii are reported otherwise).
    """
    a = as_alpha(alpha).value
    if a == 1.0:
        raise ValueError("no Green potential at the critical index")
    if pairs is None:
        pairs = replicas
    rows = []
    sidx = 0
    for x in grid_neg:
        x = float(x)
        res, se, u_est = flux_residual_one_step(
            a, f, x, replicas, policy, stream.derive(sidx)
        )
        scale = max(abs(float(f(x))), 0.1 * _f_scale(f)[0])
        status = "ok" if abs(res) <= max(3.0 * se, 0.1 * scale) else "fail"
        if 3.0 * se > scale:
            status = "inconclusive"
        rows.append(
            dict(
                x=x,
                side="neg",
                u_hat=u_est.mean,
                se_u=u_est.se,
                residual=res,
                se_residual=se,
                status=status,
                r=float("nan"),
            )
        )
        sidx += 100
    for x in grid_pos:
        x = float(x)
        fx = float(f(x))
        scale = max(abs(fx), 0.1 * _f_scale(f)[0])
        chosen = None
        for r in sorted(probe_radii, reverse=True):  # large to small
            if r >= x:
                continue
            probe = dynkin_probe_green(
                a, f, x, r, pairs, policy, stream.derive(sidx)
            )
            cand = dict(
                x=x,
                side="pos",
                u_hat=float("nan"),
                se_u=float("nan"),
                residual=probe.mean + fx,
                se_residual=probe.se,
                status="ok",
                r=r,
            )
            sidx += 100
            if 3.0 * probe.se <= scale:
                chosen = cand  # smallest radius still resolving the scale
            elif chosen is None:
                cand["status"] = "inconclusive"
                chosen = cand
                break
        if chosen is not None and chosen["status"] == "ok":
            if abs(chosen["residual"]) > max(3.0 * chosen["se_residual"], 0.1 * scale):
                chosen["status"] = "fail"
        if chosen is not None:
            rows.append(chosen)
    return NeumannReport(rows=rows)


def export_residual_csv(report: NeumannReport, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "u_hat", "se_u", "residual", "se_residual", "status"])
        for r in report.rows:
            writer.writerow(
                [
                    repr(r["x"]),
                    repr(r["u_hat"]),
                    repr(r["se_u"]),
                    repr(r["residual"]),
                    repr(r["se_residual"]),
                    r["status"],
                ]
            )
