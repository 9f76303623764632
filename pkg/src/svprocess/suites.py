"""Named verification suites aggregating the module-level checks.

Each suite returns CheckRow records; a row passes when |estimate - target|
fits inside its tolerance (statistical rows use 3 standard errors, quadrature
rows their stated absolute tolerance, test rows a p-value floor).  The same
functions back the command line and the acceptance tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp, linregress

from . import analytic, chain, neumann, quadrature, stats, walk
from .samplers import RngStream, sample_exit_position, sample_return_jump, sample_W
from .testfunctions import Bump, BumpSum, PowerFunction
from .walk import StepPolicy

__all__ = ["CheckRow"] + [f"suite_{name}" for name in (
    "moments", "harmonic", "hardy", "generator", "scaling", "neumann", "lifetime"
)]


@dataclass
class CheckRow:
    claim: str
    claim_id: str
    estimate: float
    target: float
    tolerance: float
    passed: bool


def _band_row(claim, claim_id, est: stats.EstimateCI, target) -> CheckRow:
    tol = 3.0 * est.se
    return CheckRow(claim, claim_id, est.mean, target, tol, abs(est.mean - target) <= tol)


def _abs_row(claim, claim_id, value, target, tol) -> CheckRow:
    return CheckRow(claim, claim_id, value, target, tol, abs(value - target) <= tol)


def _p_row(claim, claim_id, p, floor=0.01) -> CheckRow:
    return CheckRow(claim, claim_id, p, 1.0, floor, p > floor)


# ------------------------------------------------------------------


def suite_moments(cfg) -> list[CheckRow]:
    n = cfg.replicas
    n6 = 10 * cfg.replicas
    rows = []
    for i, a in enumerate((0.6, 1.0, 1.5)):
        w = sample_W(a, RngStream(cfg.seed, 10 + i), size=n)
        est = stats.mean_ci(w ** ((a - 1.0) / 2.0))
        rows.append(
            _band_row(
                f"reflection-ratio moment at alpha={a}",
                "rho-moment-identity",
                est,
                analytic.rho(a),
            )
        )
    for i, (a, n_use, want) in enumerate(((0.7, n, 1), (1.0, n6, 0), (1.3, n, -1))):
        w = sample_W(a, RngStream(cfg.seed, 20 + i), size=n_use)
        band = stats.sign_test_with_guard(np.log(w), 0.0)
        got = {"above": 1, "contains": 0, "below": -1}[band.value]
        rows.append(
            CheckRow(
                f"log-ratio mean sign at alpha={a}",
                "log-moment-trichotomy",
                got,
                want,
                0.0,
                got == want,
            )
        )
    w = sample_W(1.0, RngStream(cfg.seed, 30), size=n6)
    logs = np.log(w)
    var_est = stats.mean_ci((logs - logs.mean()) ** 2)
    rows.append(
        _band_row(
            "log-ratio variance at the critical index",
            "critical-log-variance",
            var_est,
            analytic.log_moment_variance_critical(),
        )
    )
    return rows


def suite_harmonic(cfg) -> list[CheckRow]:
    n6 = 10 * cfg.replicas
    rows = []
    for a in (0.7, 1.5):
        quad = quadrature.poisson_kernel_power_moment(a, a - 1.0)
        rows.append(
            _abs_row(
                f"exit-law harmonic moment by quadrature, alpha={a}",
                "harmonic-balance-quadrature",
                quad,
                1.0,
                1e-8,
            )
        )
        y = sample_exit_position(a, 1.0, RngStream(cfg.seed, 40 + int(10 * a)), size=n6)
        est = stats.mean_ci(np.abs(y) ** (a - 1.0))
        rows.append(
            _band_row(
                f"exit-law harmonic moment by MC, alpha={a}",
                "harmonic-balance-mc",
                est,
                1.0,
            )
        )
    return rows


def suite_hardy(cfg) -> list[CheckRow]:
    rows = []
    hc1 = analytic.hardy_constants(1.0)
    rows.append(
        _abs_row(
            "first weighted-energy constant at the critical index",
            "hardy-constant-critical",
            hc1.c_alpha,
            0.0,
            1e-10,
        )
    )
    rows.append(
        CheckRow(
            "second weighted-energy constant at the critical index",
            "hardy-constant-critical",
            hc1.d_alpha,
            0.0,
            0.0,
            hc1.d_alpha == 0.0,
        )
    )
    for a in (0.5, 1.5):
        hc = analytic.hardy_constants(a)
        rows.append(
            CheckRow(
                f"weighted-energy constants positive at alpha={a}",
                "hardy-constants-positive",
                min(hc.c_alpha, hc.d_alpha),
                0.0,
                0.0,
                hc.c_alpha > 0.0 and hc.d_alpha > 0.0,
            )
        )
    bundled = (
        ("bump at 1.5", Bump(1.5, 0.4)),
        ("bump at -1.5", Bump(-1.5, 0.4)),
        ("two-bump sum", BumpSum((Bump(1.5, 0.4), Bump(-1.5, 0.4)))),
    )
    for a in (0.5, 1.5):
        for name, tf in bundled:
            lhs, rhs, margin = quadrature.hardy_check(a, tf)
            rows.append(
                CheckRow(
                    f"energy lower bound margin, {name}, alpha={a}",
                    "hardy-inequality-margin",
                    margin,
                    0.0,
                    1e-8,
                    margin >= -1e-8,
                )
            )
    return rows


def suite_generator(cfg) -> list[CheckRow]:
    rows = []
    for a in (0.5, 1.5):
        for b in (0.0, a - 1.0):
            val = analytic.generator_constant(a, b, "D")
            rows.append(
                _abs_row(
                    f"decay constant vanishes at beta={b:.3g}, alpha={a}",
                    "decay-constant-roots",
                    val,
                    0.0,
                    1e-8,
                )
            )
        mid = (a - 1.0) / 2.0
        val_d = analytic.generator_constant(a, mid, "D")
        val_dc = analytic.generator_constant(a, mid, "Dc")
        rows.append(
            CheckRow(
                f"decay constant positive inside, alpha={a}",
                "decay-constant-interior",
                min(val_d, val_dc),
                0.0,
                0.0,
                val_d > val_dc > 0.0,
            )
        )
    a = 1.5
    b = (a - 1.0) / 2.0
    u = PowerFunction(b)
    target = -analytic.stable_constant(a) * analytic.generator_constant(a, b, "D")
    probe = None
    for i, r in enumerate((0.2, 0.1, 0.05)):
        probe = neumann.dynkin_probe(a, u, 1.0, r, 2 * cfg.replicas, RngStream(cfg.seed, 60 + i))
        tol = max(3.0 * probe.se, 0.1 * abs(target))
        rows.append(
            CheckRow(
                f"characteristic-operator probe on the power function, r={r}",
                "generator-probe-power",
                probe.mean,
                target,
                tol,
                abs(probe.mean - target) <= tol,
            )
        )
    return rows


def suite_scaling(cfg) -> list[CheckRow]:
    n = cfg.replicas
    rows = []
    # exit-law normalization and sampler laws
    for a in (0.7, 1.0, 1.5):
        rows.append(
            _abs_row(
                f"exit-density normalization by quadrature, alpha={a}",
                "exit-law-mass",
                quadrature.poisson_kernel_normalization(a),
                1.0,
                1e-8,
            )
        )
        y = sample_exit_position(a, 1.0, RngStream(cfg.seed, 70 + int(10 * a)), size=n)
        _, p = stats.ks_test(y, lambda t: analytic.exit_position_cdf(a, 1.0, t))
        rows.append(_p_row(f"exit sampler vs closed-form law, alpha={a}", "exit-law-ks", p))
    a = 1.0
    wj = sample_return_jump(a, -1.0, RngStream(cfg.seed, 80), size=n)
    _, p = stats.ks_test(wj, lambda t: 1.0 - (1.0 / (1.0 + t)) ** a)
    rows.append(_p_row("return-jump law vs survival function", "return-jump-ks", p))

    # semigroup: mass, supermedian, scaling
    pol = StepPolicy(c_step=0.02)
    n_semi = max(20_000, n // 5)
    est = walk.semigroup_apply(
        1.3, lambda u: np.ones_like(np.asarray(u, dtype=float)), 1.0, 0.2, n_semi, pol,
        RngStream(cfg.seed, 90),
    )
    rows.append(
        CheckRow(
            "semigroup mass at most one (alpha=1.3, x=0.2, t=1)",
            "semigroup-subprobability",
            est.mean,
            1.0,
            3.0 * est.se,
            est.mean <= 1.0 + 3.0 * est.se,
        )
    )
    a = 1.5
    h = PowerFunction(a - 1.0)
    sidx = 0
    for x in (0.5, 1.0, 2.0):
        for t in (0.1, 1.0):
            est = walk.semigroup_apply(a, h, t, x, n_semi, pol, RngStream(cfg.seed, 100 + sidx))
            bound = float(h(x))
            rows.append(
                CheckRow(
                    f"power function supermedian at x={x}, t={t}",
                    "semigroup-supermedian",
                    est.mean,
                    bound,
                    3.0 * est.se,
                    est.mean <= bound + 3.0 * est.se,
                )
            )
            sidx += 1
    # two-sample scaling law with k = 2
    a = 1.3
    k = 2.0
    t = 0.8
    pos1, alive1 = walk.semigroup_positions(a, k * 1.0, t, n_semi, pol, RngStream(cfg.seed, 120))
    pos2, alive2 = walk.semigroup_positions(
        a, 1.0, t * k**-a, n_semi, pol, RngStream(cfg.seed, 121)
    )
    surv1 = stats.mean_ci(alive1.astype(float))
    surv2 = stats.mean_ci(alive2.astype(float))
    se = math.hypot(surv1.se, surv2.se)
    rows.append(
        CheckRow(
            "semigroup scaling: survival mass matches",
            "semigroup-scaling-mass",
            surv1.mean,
            surv2.mean,
            3.0 * se,
            abs(surv1.mean - surv2.mean) <= 3.0 * se,
        )
    )
    ks = ks_2samp(pos1[alive1] / k, pos2[alive2])
    rows.append(
        _p_row("semigroup scaling: positions match after rescaling", "semigroup-scaling-ks", ks.pvalue)
    )
    # killed-walk exit-time scaling
    tau_a, _ = walk.killed_walk_batch(1.5, 2.0, n // 10, StepPolicy(), RngStream(cfg.seed, 130))
    tau_b, _ = walk.killed_walk_batch(1.5, 1.0, n // 10, StepPolicy(), RngStream(cfg.seed, 131))
    ks = ks_2samp(tau_a, tau_b * 2.0**1.5)
    rows.append(_p_row("killed-walk exit-time scaling", "exit-time-scaling-ks", ks.pvalue))
    return rows


def suite_lifetime(cfg) -> list[CheckRow]:
    n = cfg.replicas
    rows = []
    pol = StepPolicy()
    # truncated lifetime: tail bounds and start-scaling via shared draws
    life = walk.estimate_lifetime(1.3, 1.0, max(5000, n // 20), pol, RngStream(cfg.seed, 140))
    rows.append(
        CheckRow(
            "lifetime truncation bound below 1e-3 of each total",
            "lifetime-truncation",
            life.max_relative_tail,
            0.0,
            1e-3,
            life.max_relative_tail <= 1e-3,
        )
    )
    ratio, _ = walk.lifetime_scaling_check(
        1.3, (1.0, 2.0), max(5000, n // 20), pol, RngStream(cfg.seed, 141)
    )
    tol = 3.0 * ratio.se + 1e-9
    rows.append(
        CheckRow(
            "lifetime start-scaling ratio",
            "lifetime-scaling",
            ratio.mean,
            2.0**1.3,
            tol,
            abs(ratio.mean - 2.0**1.3) <= tol,
        )
    )
    # drift trichotomy from the exact chain
    ens = chain.simulate_chain_ensemble(0.7, 1.0, 200, 50, RngStream(cfg.seed, 142))
    st = chain.chain_log_stats(ens)["mean_log_w"]
    rows.append(
        CheckRow(
            "log-position slope strictly positive below critical",
            "chain-slope-positive",
            st.mean,
            0.0,
            3.0 * st.se,
            st.mean - 3.0 * st.se > 0.0,
        )
    )
    ens1 = chain.simulate_chain_ensemble(1.0, 1.0, 200, max(50, n // 2000), RngStream(cfg.seed, 143))
    cls = chain.classify_drift(1.0, ens1)
    rows.append(
        CheckRow(
            "drift classifier reports oscillation at the critical index",
            "drift-oscillates",
            float(cls is chain.DriftClass.OSCILLATES),
            1.0,
            0.0,
            cls is chain.DriftClass.OSCILLATES,
        )
    )
    # survival asymptotics of the killed walk
    tau, _ = walk.killed_walk_batch(1.5, 1.0, n, StepPolicy(c_step=0.1), RngStream(cfg.seed, 144))
    ts = np.geomspace(1.0, 100.0, 10)
    surv = np.array([np.mean(tau > t) for t in ts])
    slope = linregress(np.log(ts), np.log(surv)).slope
    rows.append(
        _abs_row(
            "survival decay exponent over one to one hundred",
            "survival-slope",
            slope,
            -0.5,
            0.1,
        )
    )
    return rows


def suite_neumann(cfg) -> list[CheckRow]:
    n = cfg.replicas
    rows = []
    f = BumpSum((Bump(1.5, 0.5), Bump(-1.5, 0.5)))
    pol = StepPolicy(c_step=0.03)
    for a in (0.7, 1.5):
        report = neumann.verify_neumann(
            a,
            f,
            grid_neg=(-0.5, -1.0, -2.0),
            grid_pos=(0.5, 1.5),
            replicas=max(20_000, n // 5),
            policy=pol,
            stream=RngStream(cfg.seed, 150 + int(10 * a)),
            probe_radii=(0.35, 0.2, 0.1),
            pairs=max(20_000, n // 5),
        )
        for r in report.rows:
            tol = max(3.0 * r["se_residual"], 0.1 * max(abs(float(f(r["x"]))), 0.1))
            rows.append(
                CheckRow(
                    f"two-sided residual at x={r['x']}, alpha={a} ({r['side']})",
                    "neumann-residual",
                    r["residual"],
                    0.0,
                    tol,
                    abs(r["residual"]) <= tol and r["status"] != "fail",
                )
            )
    # resolvent identity at the critical-adjacent index
    a = 1.3
    fb = Bump(1.5, 0.5)
    res = neumann.resolvent_residual(
        a, fb, 1.0, -1.0, max(50_000, n // 2), pol, RngStream(cfg.seed, 170)
    )
    rows.append(
        CheckRow(
            "resolvent identity residual at x=-1",
            "resolvent-identity",
            res["residual"],
            0.0,
            3.0 * res["se"],
            abs(res["residual"]) <= 3.0 * res["se"],
        )
    )
    bound = res["bound"]
    u_val = res["u_x"].value
    rows.append(
        CheckRow(
            "discounted potential bounded by sup-norm over rate",
            "resolvent-bound",
            u_val.mean,
            bound,
            3.0 * u_val.se,
            abs(u_val.mean) <= bound + 3.0 * u_val.se,
        )
    )
    return rows
