"""Deterministic evaluation of the model's singular integrals and bilinear
forms on smooth test functions.

The principal-value operator is realized through symmetric pairing: the inner
(0, w_lo) piece is a Taylor tail using the exact second derivative, the
midrange is adaptive Gauss quadrature split at support edges, interior power
singularities go through tanh-sinh in endpoint-distance coordinates, and the
infinite tails are mapped to (0, 1).
"""

from __future__ import annotations

import math

import numpy as np

from ._integrate import gauss_adaptive, gauss_panel, tanh_sinh
from .analytic import as_alpha, hardy_constants, nu_halfline_mass, stable_constant
from .testfunctions import Bump, BumpSum, PowerFunction, TableFunction, bump_components

__all__ = [
    "fractional_laplacian_pv",
    "nonlocal_normal_derivative",
    "normal_derivative_weights",
    "dirichlet_form",
    "hardy_check",
    "poisson_kernel_normalization",
    "poisson_kernel_power_moment",
]


def _quad_log(f, w_lo: float, w_hi: float, tol: float) -> float:
    """Integrate f over (w_lo, w_hi) in log coordinates w = e^s.

    Power-law integrands become smooth exponentials in s, which removes the
    boundary layer that plain rules see when w_lo is many decades below w_hi.
    """
    return gauss_adaptive(
        lambda s: f(np.exp(s)) * np.exp(s), math.log(w_lo), math.log(w_hi), tol=tol
    )


def fractional_laplacian_pv(alpha, u, x: float, tol: float = 1e-9) -> float:
    """Principal-value fractional Laplacian of u at x (positive-operator sign).

    Returns A * int_0^inf (2u(x) - u(x+w) - u(x-w)) w^(-1-alpha) dw.  u must
    be twice differentiable at x (bump anywhere; power away from the origin).
    """
    a = as_alpha(alpha).value
    A = stable_constant(a)
    if isinstance(u, PowerFunction):
        if x == 0.0:
            raise ValueError("power test function is not twice differentiable at the origin")
        return A * _pv_power(a, u.exponent, abs(x), tol)
    if not isinstance(u, (Bump, BumpSum)):
        raise TypeError("need a bump, a sum of bumps, or a power function")

    comps = bump_components(u)
    scale = min(b.radius for b in comps)
    w_lo = 1e-8 * scale
    ux = float(u(x))
    u2x = float(u.second_derivative(x))
    inner = -u2x * w_lo ** (2.0 - a) / (2.0 - a)  # quartic remainder is O(w_lo^(4-a))

    def integrand(w):
        return (u.difference(x, w) + u.difference(x, -w)) * w ** (-1.0 - a)

    edges = sorted({e for b in comps for e in b.support})
    d_out = max(abs(x - e) for e in edges)
    if d_out <= w_lo:
        d_out = 2.0 * w_lo
    breaks = sorted({abs(x - e) for e in edges if w_lo < abs(x - e) < d_out})
    pieces = [w_lo, *breaks, d_out]
    # first piece spans many scales of the steep w^(-1-a) factor: integrate
    # in log coordinates; later pieces are mild
    mid = _quad_log(integrand, pieces[0], pieces[1], tol=tol)
    for lo, hi in zip(pieces[1:-1], pieces[2:]):
        if hi > lo:
            mid += gauss_adaptive(integrand, lo, hi, tol=tol / max(1, len(pieces)))
    tail = 2.0 * ux * d_out ** (-a) / a  # u(x +- w) vanishes beyond d_out
    return A * (inner + mid + tail)


def _pv_power(a: float, beta: float, ax: float, tol: float) -> float:
    """Pairing integral for |.|^beta at |x| = ax > 0, in cancellation-safe pieces."""
    hx = ax**beta
    u2x = beta * (beta - 1.0) * ax ** (beta - 2.0)
    w_lo = 1e-8 * ax
    total = -u2x * w_lo ** (2.0 - a) / (2.0 - a)

    def plain_small(w):  # w < ax/2: expm1 keeps the pair difference accurate
        r = w / ax
        diff = np.expm1(beta * np.log1p(r)) + np.expm1(beta * np.log1p(-r))
        return -hx * diff * w ** (-1.0 - a)

    def plain(w):
        return (2.0 * hx - (ax + w) ** beta - np.abs(ax - w) ** beta) * w ** (-1.0 - a)

    dm = 1e-3 * ax  # distance-coordinate window around the interior singularity w = ax
    total += gauss_adaptive(plain_small, w_lo, 0.5 * ax, tol=tol)
    total += gauss_adaptive(plain, 0.5 * ax, ax - dm, tol=tol)

    def near_below(dd):  # w = ax - dd, so |ax - w| = dd exactly
        return (2.0 * hx - (2.0 * ax - dd) ** beta - dd**beta) * (ax - dd) ** (-1.0 - a)

    def near_above(dd):  # w = ax + dd
        return (2.0 * hx - (2.0 * ax + dd) ** beta - dd**beta) * (ax + dd) ** (-1.0 - a)

    total += tanh_sinh(near_below, 0.0, dm, tol=tol)
    total += tanh_sinh(near_above, 0.0, dm, tol=tol)
    M = 64.0 * ax
    total += gauss_adaptive(plain, ax + dm, M, tol=tol)

    def far(v):  # w = M / v maps the tail to (0, 1); scaled to stay finite at v -> 0
        r = ax * v / M
        return 2.0 * hx * M**-a * v ** (a - 1.0) - M ** (beta - a) * v ** (
            a - beta - 1.0
        ) * ((1.0 + r) ** beta + (1.0 - r) ** beta)

    total += tanh_sinh(far, 0.0, 1.0, tol=tol)
    return total


def nonlocal_normal_derivative(alpha, u, x: float, tol: float = 1e-9) -> float:
    """Flux functional at x < 0: nu(x,D) u(x) - int_D u(y) nu(x,y) dy.

    Accepts bumps (integrated over their supports) and powers with exponent
    in (-1, alpha) (the growth condition for a convergent tail).
    """
    a = as_alpha(alpha).value
    if x >= 0.0:
        raise ValueError("the flux functional is defined on the negative half-line")
    A = stable_constant(a)
    rate = float(nu_halfline_mass(a, x))
    ax = abs(x)
    if isinstance(u, PowerFunction):
        beta = u.exponent
        if beta >= a or beta <= -1.0:
            raise ValueError(f"growth |y|^{beta} makes the flux integral diverge for index {a}")

        def inner(y):
            return y**beta * (y + ax) ** (-1.0 - a)

        M = 32.0 * ax
        val = tanh_sinh(inner, 0.0, ax, tol=tol) + tanh_sinh(inner, ax, M, tol=tol)

        def far(v):  # y = M / v, scaled to stay finite at v -> 0
            return M ** (beta - a) * v ** (a - beta - 1.0) * (1.0 + ax * v / M) ** (-1.0 - a)

        val += tanh_sinh(far, 0.0, 1.0, tol=tol)
        return rate * float(u(x)) - A * val
    if isinstance(u, (Bump, BumpSum)):
        val = 0.0
        for b in bump_components(u):
            lo, hi = b.support
            lo = max(lo, 0.0)
            if hi <= lo:
                continue
            val += gauss_adaptive(
                lambda y: np.asarray(b(y)) * (y + ax) ** (-1.0 - a), lo, hi, tol=tol
            )
        return rate * float(u(x)) - A * val
    raise TypeError("need a bump, a sum of bumps, or a power function")


def normal_derivative_weights(alpha, x: float, table: TableFunction) -> np.ndarray:
    """Weights w with int_D u(y) nu(x,y) dy ~ w . (table values), for x < 0.

    Below the grid u is frozen at the first node; above it u decays like
    (y_max / y)^(1+alpha) from the last node.  The functional stays linear in
    the node values, so standard errors propagate through it exactly.
    """
    a = as_alpha(alpha).value
    if x >= 0.0:
        raise ValueError("defined on the negative half-line")
    A = stable_constant(a)
    ax = abs(x)
    grid = table.grid
    n = grid.size
    w = np.zeros(n)
    for j in range(n - 1):
        y0, y1 = grid[j], grid[j + 1]
        if table.log_spacing:
            den = math.log(y1) - math.log(y0)
            lam = lambda y: (np.log(y) - math.log(y0)) / den
        else:
            den = y1 - y0
            lam = lambda y: (y - y0) / den
        kern = lambda y: A * (y + ax) ** (-1.0 - a)
        w[j] += gauss_panel(lambda y: kern(y) * (1.0 - lam(y)), y0, y1, n=24)
        w[j + 1] += gauss_panel(lambda y: kern(y) * lam(y), y0, y1, n=24)
    w[0] += A / a * (ax**-a - (grid[0] + ax) ** -a)
    ym = grid[-1]

    def far(v):  # y = ym / v with u(y) ~ values[-1] (ym/y)^(1+alpha), scaled form
        return ym**-a * v ** (2.0 * a) * (1.0 + ax * v / ym) ** (-1.0 - a)

    w[-1] += A * tanh_sinh(far, 0.0, 1.0, tol=1e-10)
    return w


# ------------------------------------------------------------------
# bilinear energy
# ------------------------------------------------------------------


def _merge(spans):
    spans = sorted(tuple(s) for s in spans if s[1] > s[0])
    if not spans:
        return []
    merged = [list(spans[0])]
    for lo, hi in spans[1:]:
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [tuple(s) for s in merged]


def _overlap(s1, s2):
    lo = max(s1[0], s2[0])
    hi = min(s1[1], s2[1])
    return (lo, hi) if hi > lo else None


def _form_single(a: float, b1: Bump, b2: Bump, tol: float) -> float:
    """Energy pairing of two single bumps with supports avoiding the origin.

    Decomposition: near-diagonal difference form on the positive side, far
    same-side part expanded into mass and product terms, and the cross-sign
    block (counted once for both orientations).
    """
    A = stable_constant(a)
    s1, s2 = b1.support, b2.support
    d = 0.25 * min(abs(e) for e in (*s1, *s2))

    # --- near-diagonal, positive side only: |x - y| < d forces sign(y) = sign(x)
    near = 0.0
    dil = _overlap((s1[0] - d, s1[1] + d), (s2[0] - d, s2[1] + d))
    if dil is not None:
        lo = max(dil[0], d)  # x > d keeps x + w positive for |w| < d
        hi = dil[1]
        if hi > lo:
            w_in = 1e-8 * min(b1.radius, b2.radius)
            edges = sorted({e for b in (b1, b2) for e in b.support})

            def near_outer(xs):
                xs = np.atleast_1d(xs)
                out = np.empty_like(xs)
                for i, xi in enumerate(xs):

                    def paired(w):
                        return (
                            b1.difference(xi, w) * b2.difference(xi, w)
                            + b1.difference(xi, -w) * b2.difference(xi, -w)
                        ) * w ** (-1.0 - a)

                    # (0, w_in): leading Taylor term 2 b1' b2' w^2 of the pair sum
                    val = (
                        2.0
                        * float(b1.first_derivative(xi))
                        * float(b2.first_derivative(xi))
                        * w_in ** (2.0 - a)
                        / (2.0 - a)
                    )
                    # split where xi -+ w crosses a support edge (the bump is
                    # smooth but not analytic there)
                    brk = sorted({abs(xi - e) for e in edges if w_in < abs(xi - e) < d})
                    pieces = [w_in, *brk, d]
                    for plo, phi in zip(pieces[:-1], pieces[1:]):
                        val += _quad_log(paired, plo, phi, tol=tol)
                    out[i] = val
                return out

            # split the outer range where the inner structure changes
            cuts = sorted(
                {lo, hi}
                | {e for e in edges if lo < e < hi}
                | {e + s * d for e in edges for s in (-1.0, 1.0) if lo < e + s * d < hi}
            )
            for olo, ohi in zip(cuts[:-1], cuts[1:]):
                near += gauss_panel(near_outer, olo, ohi, n=96)
            near *= 0.5 * A

    # --- far same-side (both positive), expanded
    far = 0.0
    ov_pos = _overlap((max(s1[0], 0.0), s1[1]), (max(s2[0], 0.0), s2[1]))
    if ov_pos is not None:
        mass_far = lambda x: A / a * (2.0 * d**-a - x**-a)
        far += gauss_adaptive(
            lambda x: np.asarray(b1(x)) * np.asarray(b2(x)) * mass_far(x),
            *ov_pos,
            tol=tol,
        )
    if s1[1] > 0.0 and s2[1] > 0.0:
        xlo, xhi = max(s1[0], 1e-12), s1[1]
        ylo, yhi = max(s2[0], 1e-12), s2[1]

        def prod_outer(xs):
            xs = np.atleast_1d(xs)
            out = np.zeros_like(xs)
            for i, xi in enumerate(xs):
                acc = 0.0
                for t0, t1 in ((ylo, min(yhi, xi - d)), (max(ylo, xi + d), yhi)):
                    if t1 > t0:
                        # the kernel is steep where the strip was cut out
                        acc += tanh_sinh(
                            lambda y: np.asarray(b2(y)) * np.abs(y - xi) ** (-1.0 - a),
                            t0,
                            t1,
                            tol=1e-11,
                        )
                out[i] = float(b1(xi)) * acc
            return out

        # outer kinks where the strip boundary crosses the inner support
        cuts = sorted(
            {xlo, xhi}
            | {e + s * d for e in (ylo, yhi) for s in (-1.0, 1.0) if xlo < e + s * d < xhi}
        )
        for olo, ohi in zip(cuts[:-1], cuts[1:]):
            far -= A * gauss_panel(prod_outer, olo, ohi, n=96)

    # --- cross-sign block (x > 0, y < 0), both orientations folded in
    cross = 0.0
    nu_opp = lambda x: A / a * np.abs(x) ** (-a)
    ov = _overlap((max(s1[0], 1e-12), s1[1]), (max(s2[0], 1e-12), s2[1]))
    if ov is not None:
        cross += gauss_adaptive(
            lambda x: np.asarray(b1(x)) * np.asarray(b2(x)) * nu_opp(x), *ov, tol=tol
        )
    ov = _overlap((s1[0], min(s1[1], -1e-12)), (s2[0], min(s2[1], -1e-12)))
    if ov is not None:
        cross += gauss_adaptive(
            lambda y: np.asarray(b1(y)) * np.asarray(b2(y)) * nu_opp(y), *ov, tol=tol
        )

    def prod_cross(bx, by):
        # int_{x>0} bx(x) int_{y<0} by(y) nu(x,y) dy dx
        sx, sy = bx.support, by.support
        xlo, xhi = max(sx[0], 1e-12), sx[1]
        ylo, yhi = sy[0], min(sy[1], -1e-12)
        if xhi <= xlo or yhi <= ylo:
            return 0.0

        def outer(xs):
            xs = np.atleast_1d(xs)
            out = np.empty_like(xs)
            for i, xi in enumerate(xs):
                out[i] = float(bx(xi)) * gauss_panel(
                    lambda y: np.asarray(by(y)) * (xi - y) ** (-1.0 - a), ylo, yhi, n=48
                )
            return out

        return gauss_panel(outer, xlo, xhi, n=96)

    cross -= A * prod_cross(b1, b2)
    cross -= A * prod_cross(b2, b1)
    return near + far + cross


def dirichlet_form(alpha, u, v, tol: float = 1e-9) -> float:
    """Bilinear energy of u and v over all site pairs except both-negative.

    u and v are bumps or sums of bumps with supports avoiding the origin;
    the value expands bilinearly over the bump components.
    """
    a = as_alpha(alpha).value
    cu = bump_components(u)
    cv = bump_components(v)
    for b in (*cu, *cv):
        if not b.avoids_origin():
            raise ValueError("test-function support must avoid the origin")
    total = 0.0
    for b1 in cu:
        for b2 in cv:
            total += _form_single(a, b1, b2, tol)
    return total


def hardy_check(alpha, u, tol: float = 1e-9):
    """Energy lower bound check: returns (lhs, rhs, margin = lhs - rhs).

    lhs is the bilinear energy of u; rhs the weighted L2 mass with the
    optimal constants.  Undefined at the critical index, where the bound
    degenerates to the trivial one.
    """
    a = as_alpha(alpha).value
    if a == 1.0:
        raise ValueError("the bound degenerates at the critical index")
    comps = bump_components(u)
    if all(b.amplitude == 0.0 for b in comps):
        return 0.0, 0.0, 0.0
    for b in comps:
        if not b.avoids_origin():
            raise ValueError("test-function support must avoid the origin")
    hc = hardy_constants(a)
    lhs = dirichlet_form(a, u, u, tol=tol)

    def weighted(x):
        ux = np.asarray(u(x))
        return ux * ux * np.abs(x) ** (-a)

    rhs = 0.0
    for lo, hi in _merge([b.support for b in comps]):
        if hi > 0.0:
            rhs += (hc.c_alpha + hc.d_alpha) * gauss_adaptive(
                weighted, max(lo, 1e-12), hi, tol=tol
            )
        if lo < 0.0:
            rhs += hc.c_alpha * gauss_adaptive(weighted, lo, min(hi, -1e-12), tol=tol)
    return lhs, rhs, lhs - rhs


# ------------------------------------------------------------------
# half-line exit-law moments
# ------------------------------------------------------------------


def poisson_kernel_normalization(alpha, tol: float = 1e-11) -> float:
    """Quadrature of the half-line exit density over its range (target 1)."""
    return poisson_kernel_power_moment(alpha, 0.0, tol=tol)


def poisson_kernel_power_moment(alpha, p: float, tol: float = 1e-11) -> float:
    """Quadrature of int P(1,y) |y|^p dy over the negative half-line.

    With p = alpha - 1 this is the harmonic-balance moment with target 1;
    requires alpha/2 - 1 < p < alpha/2 for convergence.
    """
    a = as_alpha(alpha).value
    if not (a / 2.0 - 1.0 < p < a / 2.0):
        raise ValueError(f"moment p={p} diverges for index {a}")
    c = math.sin(math.pi * a / 2.0) / math.pi

    def lower(s):
        return c * s ** (p - a / 2.0) / (1.0 + s)

    def upper(uu):  # s = 1/u maps (1, inf) to (0, 1)
        return c * uu ** (a / 2.0 - p - 1.0) / (1.0 + uu)

    return tanh_sinh(lower, 0.0, 1.0, tol=tol) + tanh_sinh(upper, 0.0, 1.0, tol=tol)
