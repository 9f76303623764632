"""Symbolic test functions evaluable everywhere on the line.

Three kinds: smooth compactly supported bumps, power functions |x|^beta, and
tabulated functions (for Monte Carlo-built grids).  Bump and power evaluation
is exact formula-based; only the table kind interpolates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Bump", "PowerFunction", "TableFunction", "BumpSum", "bump_components"]


@dataclass(frozen=True)
class Bump:
    """amplitude * exp(1 - 1/(1 - v^2)) with v = (x-center)/radius, zero outside."""

    center: float
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")

    @property
    def support(self) -> tuple[float, float]:
        return (self.center - self.radius, self.center + self.radius)

    def avoids_origin(self) -> bool:
        lo, hi = self.support
        return lo > 0.0 or hi < 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        v = (x - self.center) / self.radius
        inside = np.abs(v) < 1.0
        out = np.zeros_like(x)
        vv = v[inside]
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - vv * vv))
        return out if out.ndim else float(out)

    def first_derivative(self, x):
        x = np.asarray(x, dtype=float)
        v = (x - self.center) / self.radius
        inside = np.abs(v) < 1.0
        out = np.zeros_like(x)
        vv = v[inside]
        q = 1.0 - vv * vv
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / q) * (-2.0 * vv / q**2) / self.radius
        return out if out.ndim else float(out)

    def difference(self, x: float, w):
        """u(x) - u(x + w), cancellation-free for small w.

        When both points sit inside the support the exponent difference is a
        rational expression evaluated without subtracting near-equal values,
        so the result keeps full relative accuracy down to w -> 0.
        """
        w_in = np.asarray(w, dtype=float)
        scalar = w_in.ndim == 0
        w_arr = np.atleast_1d(w_in)
        v = (x - self.center) / self.radius
        vw = v + w_arr / self.radius
        ux = float(self(x))
        out = ux - np.asarray(self(x + w_arr))
        both = (abs(v) < 1.0) & (np.abs(vw) < 1.0)
        if np.any(both):
            q1 = 1.0 - v * v
            q2 = 1.0 - vw[both] * vw[both]
            # g(vw) - g(v) = (q2 - q1)/(q1 q2) and q2 - q1 = -(w/r)(v + vw),
            # with the first factor taken from w directly to keep low bits
            dg = -(w_arr[both] / self.radius) * (v + vw[both]) / (q1 * q2)
            # cancellation only matters for small exponent differences; the
            # naive path avoids exp overflow when the points are far apart
            safe = np.abs(dg) <= 1.0
            out[both] = np.where(safe, -ux * np.expm1(np.where(safe, dg, 0.0)), out[both])
        return float(out[0]) if scalar else out

    def second_derivative(self, x):
        """Exact second derivative, from the chain rule on the exponent."""
        x = np.asarray(x, dtype=float)
        v = (x - self.center) / self.radius
        inside = np.abs(v) < 1.0
        out = np.zeros_like(x)
        vv = v[inside]
        q = 1.0 - vv * vv
        g1 = -2.0 * vv / q**2
        g2 = -2.0 / q**2 - 8.0 * vv * vv / q**3
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / q) * (g2 + g1 * g1) / self.radius**2
        return out if out.ndim else float(out)

    def sup_norm(self) -> float:
        return abs(self.amplitude)


@dataclass(frozen=True)
class PowerFunction:
    """|x|^exponent on the punctured line."""

    exponent: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.abs(x) ** self.exponent
        return out if out.ndim else float(out)

    def second_derivative(self, x):
        b = self.exponent
        x = np.asarray(x, dtype=float)
        if np.any(x == 0.0):
            raise ValueError("power function is not twice differentiable at the origin")
        out = b * (b - 1.0) * np.abs(x) ** (b - 2.0)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class BumpSum:
    """Finite sum of bumps; used for two-sided test data."""

    parts: tuple[Bump, ...]

    @property
    def support(self) -> tuple[float, float]:
        los, his = zip(*(p.support for p in self.parts))
        return (min(los), max(his))

    def avoids_origin(self) -> bool:
        return all(p.avoids_origin() for p in self.parts)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for p in self.parts:
            out = out + p(x)
        return out if out.ndim else float(out)

    def first_derivative(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for p in self.parts:
            out = out + p.first_derivative(x)
        return out if out.ndim else float(out)

    def difference(self, x: float, w):
        w = np.asarray(w, dtype=float)
        out = np.zeros(np.atleast_1d(w).shape)
        for p in self.parts:
            out = out + np.atleast_1d(p.difference(x, w))
        return float(out[0]) if w.ndim == 0 else out

    def second_derivative(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for p in self.parts:
            out = out + p.second_derivative(x)
        return out if out.ndim else float(out)

    def sup_norm(self) -> float:
        # parts with disjoint supports: the sup is the largest single amplitude;
        # overlapping parts are bounded by the amplitude sum
        return sum(p.sup_norm() for p in self.parts)


class TableFunction:
    """Piecewise-linear interpolant of values on a fixed grid, zero outside.

    Grids built from Monte Carlo runs carry one value per node; evaluation is
    a linear functional of the node values (fixed weights), which keeps error
    propagation through quadrature exact.
    """

    def __init__(self, grid, values, log_spacing: bool = False):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.size != values.size or grid.size < 2:
            raise ValueError("grid and values must be matching 1-d arrays, length >= 2")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        self.grid = grid
        self.values = values
        self.log_spacing = log_spacing
        if log_spacing and np.any(grid <= 0):
            raise ValueError("log spacing needs a positive grid")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.log_spacing:
            safe = np.where(x > 0, x, np.nan)
            out = np.interp(np.log(safe), np.log(self.grid), self.values, left=0.0, right=0.0)
            out = np.where(x > 0, out, 0.0)
        else:
            out = np.interp(x, self.grid, self.values, left=0.0, right=0.0)
        return out if out.ndim else float(out)

    def hat_weights(self, x):
        """Row of interpolation weights at x: f(x) = weights . values."""
        x = float(x)
        g = np.log(self.grid) if self.log_spacing else self.grid
        t = np.log(x) if self.log_spacing else x
        w = np.zeros(self.grid.size)
        if t <= g[0] or t >= g[-1]:
            return w
        j = int(np.searchsorted(g, t)) - 1
        lam = (t - g[j]) / (g[j + 1] - g[j])
        w[j] = 1.0 - lam
        w[j + 1] = lam
        return w


def bump_components(f) -> tuple[Bump, ...]:
    """Bump parts of f; rejects anything that is not a bump or a sum of bumps."""
    if isinstance(f, Bump):
        return (f,)
    if isinstance(f, BumpSum):
        return f.parts
    raise TypeError(f"expected a bump or a sum of bumps, got {type(f)!r}")
