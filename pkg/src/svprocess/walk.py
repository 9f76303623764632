"""Time-resolved trajectory simulation: random-walk approximation of the
killed stable motion on the positive half-line, exact exponential holds and
transfer jumps on the negative side.

Spatial law: increments are exact stable draws at adaptive step times
dt = min(dt_max, c_step * pos^alpha), so the skeleton positions are exact in
distribution; the only discretization bias is in exit-time detection
(right-endpoint, O(dt)), controlled by the refinement knob c_step.

The batch engine runs bundles of paths in lockstep.  All paths inside one
bundle share the per-iteration random draws (common random numbers); bundles
are independent.  Bundle layout and stream assignment are deterministic, so
every estimator is reproducible from (seed, config).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__ as _pkg_version
from .analytic import as_alpha, nu_halfline_mass, rho, stable_constant
from .samplers import ExitEvent, RngStream, _as_generator, _uniform_open
from .stats import EstimateCI, mean_ci

__all__ = [
    "StepPolicy",
    "Trajectory",
    "StepCapExceeded",
    "simulate_killed_path",
    "killed_walk_batch",
    "simulate_trajectory",
    "estimate_lifetime",
    "lifetime_scaling_check",
    "semigroup_apply",
    "semigroup_positions",
    "export_trajectory_csv",
    "render_trajectory_svg",
]

CSV_HEADER = f"# sv-process v{_pkg_version} schema=1"

# landing exactly on the origin has probability zero; clamp rounding so the
# hold rate |z|^(-alpha) stays finite for every admissible index
_EXIT_FLOOR = -1e-150

# paths per lockstep batch; part of the deterministic engine configuration
BATCH_SIZE = 16384


@dataclass(frozen=True)
class StepPolicy:
    """Adaptive-step policy of the walk.

    c_step scales the step dt = c_step * (distance to the origin)^alpha,
    dt_max caps it, eps_kill is the absorption threshold near the origin
    relative to |x0| (only used above the critical index).
    """

    c_step: float = 0.25
    dt_max: float = math.inf
    eps_kill: float = 1e-4
    step_cap: int = 2_000_000

    def __post_init__(self):
        if self.c_step <= 0 or self.dt_max <= 0 or self.eps_kill <= 0:
            raise ValueError("policy fields must be strictly positive")

    def refined(self, factor: float) -> "StepPolicy":
        return StepPolicy(self.c_step * factor, self.dt_max, self.eps_kill, self.step_cap)


class StepCapExceeded(RuntimeError):
    pass


@dataclass
class Trajectory:
    """Piecewise path: walk segments in the positive half-line, constant
    holds on the negative side, strictly alternating."""

    x0: float
    segments: list  # (t_start, t_end, kind, payload); payload: (times, positions) | level
    lifetime_estimate: float | None
    truncated: bool
    n_reflections: int
    warnings: list = field(default_factory=list)


def _stable_from_uniforms(alpha: float, u01: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Standard symmetric stable variate from a uniform and an exponential."""
    u = math.pi * (u01 - 0.5)
    if alpha == 1.0:
        return np.tan(u)
    return (
        np.sin(alpha * u)
        / np.cos(u) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * u) / e) ** ((1.0 - alpha) / alpha)
    )


# ------------------------------------------------------------------
# scalar recording simulation (plots, small-scale diagnostics)
# ------------------------------------------------------------------


def simulate_killed_path(alpha, x: float, policy: StepPolicy, rng):
    """Walk from x > 0 until the first nonpositive position.

    Returns (tau_hat, exit_event, path) where path is the array of
    (time, position) skeleton points including the landing point.
    """
    a = as_alpha(alpha).value
    g = _as_generator(rng)
    if x <= 0:
        raise ValueError("start must be positive")
    pos = float(x)
    t = 0.0
    times = [0.0]
    points = [pos]
    for _ in range(policy.step_cap):
        dt = min(policy.dt_max, policy.c_step * pos**a)
        z = _stable_from_uniforms(a, g.random(1), g.standard_exponential(1))[0]
        pos = pos + dt ** (1.0 / a) * z
        t += dt
        times.append(t)
        points.append(pos)
        if pos <= 0.0:
            pos = min(pos, _EXIT_FLOOR)
            ev = ExitEvent(exit_position=pos, pre_exit_position=points[-2], exit_time=t)
            return t, ev, np.column_stack([times, points])
    raise StepCapExceeded(f"no exit within {policy.step_cap} steps from x={x}")


def simulate_trajectory(alpha, x0: float, policy: StepPolicy, rng, *, t_max=None, n_reflections=None) -> Trajectory:
    """Full alternating trajectory from x0 != 0 up to a horizon.

    Exactly one of t_max, n_reflections must be given.  Above the critical
    index the path is absorbed once |position| < eps_kill * |x0|.
    """
    a = as_alpha(alpha).value
    g = _as_generator(rng)
    if x0 == 0.0:
        raise ValueError("trajectory is not defined at the origin")
    if (t_max is None) == (n_reflections is None):
        raise ValueError("give exactly one of t_max, n_reflections")

    segments = []
    warnings = []
    eps_abs = policy.eps_kill * abs(x0)
    pos = float(x0)
    t = 0.0
    reflections = 0
    absorbed = False

    def horizon_reached() -> bool:
        if t_max is not None:
            return t >= t_max
        return reflections >= n_reflections

    while not horizon_reached():
        if pos < 0.0:
            rate = float(nu_halfline_mass(a, pos))
            hold = float(g.standard_exponential(1)[0]) / rate
            end = t + hold
            if t_max is not None and end >= t_max:
                segments.append((t, t_max, "hold", pos))
                t = t_max
                break
            segments.append((t, end, "hold", pos))
            t = end
            u = _uniform_open(g, 1)[0]
            pos = abs(pos) * (u ** (-1.0 / a) - 1.0)
            reflections += 1
            if a > 1.0 and pos < eps_abs:
                absorbed = True
                break
            continue
        # walk segment inside the positive half-line
        times = [t]
        pts = [pos]
        exited = False
        for _ in range(policy.step_cap):
            dt = min(policy.dt_max, policy.c_step * pos**a)
            if t_max is not None:
                dt = min(dt, t_max - t)
                if dt <= 0.0:
                    break
            z = _stable_from_uniforms(a, g.random(1), g.standard_exponential(1))[0]
            pos = pos + dt ** (1.0 / a) * z
            t += dt
            times.append(t)
            pts.append(pos)
            if pos <= 0.0:
                pos = min(pos, _EXIT_FLOOR)
                pts[-1] = pos
                exited = True
                break
            if t_max is not None and t >= t_max:
                break
        else:
            raise StepCapExceeded("walk segment exceeded the step cap")
        segments.append((times[0], t, "walk", (np.array(times), np.array(pts))))
        if not exited:
            break

    lifetime = t if absorbed else None
    if a > 1.0 and t_max is not None and absorbed and t < t_max:
        warnings.append(
            f"time horizon {t_max} runs past the estimated lifetime {t:.6g}; "
            "path is absorbed from there on"
        )
    return Trajectory(
        x0=x0,
        segments=segments,
        lifetime_estimate=lifetime,
        truncated=absorbed,
        n_reflections=reflections,
        warnings=warnings,
    )


# ------------------------------------------------------------------
# batch engines (lockstep bundles, shared draws inside a bundle)
# ------------------------------------------------------------------


def _batch_killed(alpha: float, x0: np.ndarray, policy: StepPolicy, g: np.random.Generator):
    """Vectorized killed walk: returns (tau, exit_pos) per path."""
    a = alpha
    n = x0.size
    pos = x0.astype(float).copy()
    tau = np.zeros(n)
    exit_pos = np.zeros(n)
    active = np.arange(n)
    steps = 0
    while active.size:
        steps += 1
        if steps > policy.step_cap:
            raise StepCapExceeded("killed walk batch exceeded the step cap")
        p = pos[active]
        dt = np.minimum(policy.dt_max, policy.c_step * p**a)
        z = _stable_from_uniforms(a, g.random(active.size), g.standard_exponential(active.size))
        p_new = p + dt ** (1.0 / a) * z
        tau[active] += dt
        out = p_new <= 0.0
        if np.any(out):
            landed = np.minimum(p_new[out], _EXIT_FLOOR)
            exit_pos[active[out]] = landed
        pos[active] = p_new
        active = active[~out]
    return tau, exit_pos


def killed_walk_batch(alpha, x, replicas: int, policy: StepPolicy, stream: RngStream):
    """(tau, exit_pos) samples of the killed walk from x > 0, batched."""
    a = as_alpha(alpha).value
    if x <= 0:
        raise ValueError("start must be positive")
    taus, exits = [], []
    done = 0
    b = 0
    while done < replicas:
        m = min(BATCH_SIZE, replicas - done)
        g = stream.derive(b).generator()
        t, e = _batch_killed(a, np.full(m, float(x)), policy, g)
        taus.append(t)
        exits.append(e)
        done += m
        b += 1
    return np.concatenate(taus), np.concatenate(exits)


def _evolve_bundles(
    alpha: float,
    start: np.ndarray,  # (B, P): paths in one bundle share the draws
    policy: StepPolicy,
    g: np.random.Generator,
    *,
    horizon: float | None = None,
    f=None,
    lam: float = 0.0,
    stop_rule=None,  # callable(return_pos, acc, t) -> (stop_mask, bound_values)
    skip_initial_hold: bool = False,
    eps_abs: np.ndarray | None = None,  # (B, P) absorption thresholds, alpha > 1
):
    """Lockstep state machine shared by the semigroup/potential/lifetime estimators.

    Per iteration each active bundle draws one stable variate and two
    uniforms; every path in the bundle consumes the same row, whichever phase
    it is in.  Returns final positions, alive flags, accumulated integrals,
    elapsed times, reflection counts and truncation bounds, all (B, P).
    """
    a = alpha
    B, P = start.shape
    pos = start.astype(float).copy()
    t = np.zeros((B, P))
    acc = np.zeros((B, P))
    bound = np.zeros((B, P))
    nrefl = np.zeros((B, P), dtype=np.int64)
    done = np.zeros((B, P), dtype=bool)
    alive = np.ones((B, P), dtype=bool)
    skip_hold = np.full((B, P), skip_initial_hold)

    inv_a = 1.0 / a
    A_over_a = stable_constant(a) / a

    def hold_rate(p):
        return A_over_a * np.abs(p) ** (-a)

    active = np.arange(B)
    steps = 0
    while active.size:
        steps += 1
        if steps > policy.step_cap:
            raise StepCapExceeded("bundle evolution exceeded the step cap")
        m = active.size
        z_row = _stable_from_uniforms(a, g.random(m), g.standard_exponential(m))
        uh_row = _uniform_open(g, m)
        uj_row = _uniform_open(g, m)

        p = pos[active]  # (m, P)
        tt = t[active]
        dn = done[active]
        z = np.broadcast_to(z_row[:, None], p.shape)
        uh = np.broadcast_to(uh_row[:, None], p.shape)
        uj = np.broadcast_to(uj_row[:, None], p.shape)

        # --- hold-and-jump phase for paths sitting on the negative side ---
        holding = (p < 0.0) & ~dn
        if np.any(holding):
            ph = p[holding]
            rate = hold_rate(ph)
            hold = -np.log(uh[holding]) / rate
            if f is not None:
                sk = skip_hold[active][holding]
                if lam > 0.0:
                    contrib = f(ph) * np.exp(-lam * tt[holding]) / (lam + rate)
                else:
                    contrib = f(ph) / rate
                vals = acc[active]
                vals[holding] += np.where(sk, 0.0, contrib)
                acc[active] = vals
            sk_all = skip_hold[active]
            sk_all[holding] = False
            skip_hold[active] = sk_all
            t_new = tt[holding] + hold
            if horizon is not None:
                over = t_new >= horizon
            else:
                over = np.zeros_like(t_new, dtype=bool)
            # paths whose hold covers the horizon stay where they are
            w = np.abs(ph) * (uj[holding] ** (-inv_a) - 1.0)
            p_after = np.where(over, ph, w)
            tt[holding] = np.where(over, horizon if horizon is not None else t_new, t_new)
            newly_done = over.copy()
            counted = ~over
            nr = nrefl[active]
            nr[holding] += counted.astype(np.int64)
            nrefl[active] = nr
            if eps_abs is not None:
                absorb = ~over & (p_after < eps_abs[active][holding])
                if np.any(absorb):
                    newly_done |= absorb
                    av = alive[active]
                    hv = av[holding]
                    hv[absorb] = False
                    av[holding] = hv
                    alive[active] = av
            if stop_rule is not None:
                stop, bval = stop_rule(p_after, acc[active][holding], tt[holding])
                stop &= ~over
                bv = bound[active]
                hb = bv[holding]
                hb[:] = bval
                bv[holding] = hb
                bound[active] = bv
                newly_done |= stop
            p[holding] = p_after
            dnh = dn[holding]
            dnh |= newly_done
            dn[holding] = dnh
            pos[active] = p
            t[active] = tt
            done[active] = dn

        # --- walk phase on the positive side ---
        p = pos[active]
        tt = t[active]
        dn = done[active]
        walking = (p > 0.0) & ~dn
        if np.any(walking):
            pw = p[walking]
            dt = np.minimum(policy.dt_max, policy.c_step * pw**a)
            if lam > 0.0:
                dt = np.minimum(dt, 0.1 / lam)
            if horizon is not None:
                dt = np.minimum(dt, horizon - tt[walking])
            p_new = pw + dt**inv_a * z[walking]
            exited = p_new <= 0.0
            p_new = np.where(exited, np.minimum(p_new, _EXIT_FLOOR), p_new)
            if f is not None:
                # left-endpoint rectangle: the step duration belongs to the
                # position the path started the step from; weighting the
                # landing point would give far jumps absurd time weights
                fval = f(pw)
                if lam > 0.0:
                    weight = np.exp(-lam * tt[walking]) * -np.expm1(-lam * dt) / lam
                else:
                    weight = dt
                vals = acc[active]
                wv = vals[walking]
                wv += fval * weight
                vals[walking] = wv
                acc[active] = vals
            t_new = tt[walking] + dt
            p[walking] = p_new
            tt[walking] = t_new
            if horizon is not None:
                at_horizon = ~exited & (t_new >= horizon * (1.0 - 1e-15))
                dnw = dn[walking]
                dnw |= at_horizon
                dn[walking] = dnw
            pos[active] = p
            t[active] = tt
            done[active] = dn

        # compact: a bundle stays active until every path in it is done
        finished = np.all(done[active], axis=1)
        active = active[~finished]
    return pos, alive, acc, t, nrefl, bound


def _run_bundled(alpha, starts, policy, stream, build_kwargs, pair: int = 1):
    """Split (n, pair) start array into deterministic batches and evolve each."""
    n = starts.shape[0]
    outs = []
    done = 0
    b = 0
    per_batch = max(1, BATCH_SIZE // pair)
    while done < n:
        m = min(per_batch, n - done)
        g = stream.derive(b).generator()
        outs.append(
            _evolve_bundles(alpha, starts[done : done + m], policy, g, **build_kwargs)
        )
        done += m
        b += 1
    return [np.concatenate([o[k] for o in outs], axis=0) for k in range(6)], b


# ------------------------------------------------------------------
# estimators
# ------------------------------------------------------------------


def semigroup_positions(alpha, x: float, t: float, replicas: int, policy: StepPolicy, stream: RngStream):
    """Positions at time t (and alive flags) of paths started at x != 0."""
    a = as_alpha(alpha).value
    if t <= 0:
        raise ValueError("time must be positive")
    if x == 0.0:
        raise ValueError("start must avoid the origin")
    starts = np.full((replicas, 1), float(x))
    eps = None
    if a > 1.0:
        eps = np.full((replicas, 1), policy.eps_kill * abs(x))
    (pos, alive, _, _, _, _), _ = _run_bundled(
        a, starts, policy, stream, dict(horizon=float(t), eps_abs=eps)
    )
    return pos[:, 0], alive[:, 0]


def semigroup_apply(alpha, f, t: float, x: float, replicas: int, policy: StepPolicy, stream: RngStream) -> EstimateCI:
    """Monte Carlo estimate of the expected value of f at time t from x."""
    pos, alive = semigroup_positions(alpha, x, t, replicas, policy, stream)
    vals = np.where(alive, np.asarray(f(np.where(alive, pos, 1.0)), dtype=float), 0.0)
    est = mean_ci(vals, seed=stream.seed, stream_lo=stream.stream_id)
    return est


@dataclass(frozen=True)
class LifetimeEstimate:
    estimate: EstimateCI
    samples: np.ndarray
    tail_bounds: np.ndarray
    reflections: np.ndarray

    @property
    def max_relative_tail(self) -> float:
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = self.tail_bounds / np.maximum(self.samples, 1e-300)
        return float(np.max(rel))


def _pilot_excursion_time_moment(alpha: float, q: float, policy: StepPolicy, stream: RngStream, n: int = 2000) -> float:
    """Pilot estimate of E[(excursion time from 1)^q]; q < 1/2 so the mean is stable."""
    g = stream.generator()
    tau, exits = _batch_killed(alpha, np.ones(n), policy, g)
    rates = nu_halfline_mass(alpha, exits)
    holds = g.standard_exponential(n) / rates
    return float(np.mean((tau + holds) ** q))


def estimate_lifetime(alpha, x0: float, replicas: int, policy: StepPolicy, stream: RngStream) -> LifetimeEstimate:
    """Truncated total-lifetime estimate for indices above critical.

    Each replica accumulates excursion times until the remaining-tail bound
    drops below 1e-3 of the running total.  The bound is the fractional-moment
    geometric bound: with q = (alpha-1)/(2*alpha) and r = rho(alpha), the
    q-th moment of the remaining time after a return to v is at most
    E[T^q] v^(alpha q) / (1 - r), and the reported bound is its (1/q)-th power.
    """
    a = as_alpha(alpha).value
    if a <= 1.0:
        raise ValueError("lifetime is infinite at and below the critical index")
    if x0 == 0.0:
        raise ValueError("start must avoid the origin")
    q = (a - 1.0) / (2.0 * a)
    r = rho(a)
    mq = _pilot_excursion_time_moment(a, q, policy, stream.derive(1_000_003))
    coef = mq / (1.0 - r)

    def stop_rule(ret_pos, acc, t):
        bnd = (coef * ret_pos ** (a * q)) ** (1.0 / q)
        return bnd <= 1e-3 * t, bnd

    starts = np.full((replicas, 1), abs(float(x0)))
    (pos, alive, acc, t, nrefl, bound), _ = _run_bundled(
        a, starts, policy, stream, dict(stop_rule=stop_rule)
    )
    samples = t[:, 0]
    est = mean_ci(samples, seed=stream.seed, stream_lo=stream.stream_id)
    return LifetimeEstimate(
        estimate=est, samples=samples, tail_bounds=bound[:, 0], reflections=nrefl[:, 0]
    )


def lifetime_scaling_check(alpha, x0_pair: tuple[float, float], replicas: int, policy: StepPolicy, stream: RngStream):
    """Per-replica lifetime ratio between two start points, common random numbers.

    Both starts run as one bundle sharing every draw, so the ratio isolates
    the x0^alpha scaling of the lifetime law.
    """
    a = as_alpha(alpha).value
    if a <= 1.0:
        raise ValueError("lifetime is infinite at and below the critical index")
    q = (a - 1.0) / (2.0 * a)
    r = rho(a)
    mq = _pilot_excursion_time_moment(a, q, policy, stream.derive(1_000_003))
    coef = mq / (1.0 - r)

    def stop_rule(ret_pos, acc, t):
        bnd = (coef * ret_pos ** (a * q)) ** (1.0 / q)
        return bnd <= 1e-3 * t, bnd

    x0a, x0b = x0_pair
    starts = np.empty((replicas, 2))
    starts[:, 0] = abs(float(x0a))
    starts[:, 1] = abs(float(x0b))
    (pos, alive, acc, t, nrefl, bound), _ = _run_bundled(
        a, starts, policy, stream, dict(stop_rule=stop_rule), pair=2
    )
    ratios = t[:, 1] / t[:, 0]
    return mean_ci(ratios, seed=stream.seed, stream_lo=stream.stream_id), t


# ------------------------------------------------------------------
# export
# ------------------------------------------------------------------


def export_trajectory_csv(traj: Trajectory, path: str | Path) -> None:
    """Rows of (t, position, segment_kind) along the recorded path."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "position", "segment_kind"])
        for t0, t1, kind, payload in traj.segments:
            if kind == "walk":
                times, pts = payload
                for tt, pp in zip(times, pts):
                    writer.writerow([repr(float(tt)), repr(float(pp)), "walk"])
            else:
                writer.writerow([repr(float(t0)), repr(float(payload)), "hold"])
                writer.writerow([repr(float(t1)), repr(float(payload)), "hold"])


def render_trajectory_svg(traj: Trajectory, path: str | Path, *, width=900, height=480, log_abs=False) -> None:
    """Self-contained SVG: polylines for walk segments, horizontal strokes for holds."""
    pts_t, pts_y = [], []
    for t0, t1, kind, payload in traj.segments:
        if kind == "walk":
            times, pts = payload
            pts_t.extend(times.tolist())
            pts_y.extend(pts.tolist())
        else:
            pts_t.extend([t0, t1])
            pts_y.extend([payload, payload])
    if not pts_t:
        raise ValueError("empty trajectory")
    ys = np.array(pts_y, dtype=float)
    if log_abs:
        ys = np.log10(np.maximum(np.abs(ys), 1e-12))
    t_arr = np.array(pts_t, dtype=float)
    t_lo, t_hi = float(t_arr.min()), float(t_arr.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if t_hi == t_lo:
        t_hi = t_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad
    margin = 40.0

    def sx(t):
        return margin + (t - t_lo) / (t_hi - t_lo) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    zero_level = 0.0 if not log_abs else None
    if zero_level is not None and y_lo <= zero_level <= y_hi:
        parts.append(
            f'<line x1="{margin}" y1="{sy(0.0):.2f}" x2="{width - margin}" y2="{sy(0.0):.2f}" '
            'stroke="#999" stroke-dasharray="4 3" stroke-width="1"/>'
        )
    idx = 0
    for t0, t1, kind, payload in traj.segments:
        if kind == "walk":
            times, pts = payload
            yy = pts if not log_abs else np.log10(np.maximum(np.abs(pts), 1e-12))
            coords = " ".join(f"{sx(tt):.2f},{sy(pp):.2f}" for tt, pp in zip(times, yy))
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="#1f4e9c" stroke-width="1"/>'
            )
        else:
            lvl = payload if not log_abs else math.log10(max(abs(payload), 1e-12))
            parts.append(
                f'<line x1="{sx(t0):.2f}" y1="{sy(lvl):.2f}" x2="{sx(t1):.2f}" y2="{sy(lvl):.2f}" '
                'stroke="#c23b22" stroke-width="1.5"/>'
            )
        idx += 1
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))
