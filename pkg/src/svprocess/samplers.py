"""Exact random sampling for every distribution the model gives in closed
form: symmetric stable increments, half-line exit positions, cross-side
return jumps, exponential holds, and the reflection ratio W.

All samplers take a numpy Generator (or an RngStream) and are vectorized:
pass size=None for a scalar, size=k for an array.  Streams are counter-based
(Philox), so distinct stream ids give statistically independent sequences and
identical (seed, stream_id) reproduce bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import as_alpha, nu_halfline_mass

__all__ = [
    "RngStream",
    "ExitEvent",
    "stable_increment",
    "sample_exit_position",
    "sample_return_jump",
    "sample_hold",
    "sample_W",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream_id) pair naming one reproducible random stream."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = (self.seed & _MASK64) | ((self.stream_id & _MASK64) << 64)
        return np.random.Generator(np.random.Philox(key=key))

    def derive(self, offset: int) -> "RngStream":
        return RngStream(self.seed, (self.stream_id + offset) & _MASK64)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


@dataclass(frozen=True)
class ExitEvent:
    """Exit data of one excursion from the positive half-line.

    The landing point is strictly negative: the path never lands on the
    origin.
    """

    exit_position: float
    pre_exit_position: float | None = None
    exit_time: float | None = None

    def __post_init__(self):
        if not self.exit_position < 0.0:
            raise ValueError(f"exit position must be strictly negative, got {self.exit_position}")
        if self.exit_time is not None and self.exit_time < 0.0:
            raise ValueError("exit time must be nonnegative")


def _uniform_open(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniforms in the open-closed interval (0, 1]."""
    return 1.0 - rng.random(n)


def _finish(x: np.ndarray, scalar: bool):
    return float(x[0]) if scalar else x


def stable_increment(alpha, dt, rng, size=None):
    """Increment of the symmetric stable motion over time dt > 0.

    Distributed as dt^(1/alpha) * S where S has characteristic function
    exp(-|xi|^alpha).  Uses the Chambers-Mallows-Stuck construction, with the
    critical index handled as an explicit Cauchy branch.
    """
    a = as_alpha(alpha).value
    g = _as_generator(rng)
    dt = np.asarray(dt, dtype=float)
    if np.any(dt <= 0.0):
        raise ValueError("time step must be positive")
    scalar = size is None and dt.ndim == 0
    n = dt.size if dt.ndim else (1 if size is None else int(size))
    u = math.pi * (g.random(n) - 0.5)
    if a == 1.0:
        s = np.tan(u)
    else:
        e = g.standard_exponential(n)
        s = (
            np.sin(a * u)
            / np.cos(u) ** (1.0 / a)
            * (np.cos((1.0 - a) * u) / e) ** ((1.0 - a) / a)
        )
    return _finish(dt ** (1.0 / a) * s, scalar)


def _exit_ratio(alpha: float, rng: np.random.Generator, n: int) -> np.ndarray:
    """Sample s = |landing|/start from the density c * s^(-a/2)/(1+s) on (0, inf).

    Two-piece rejection: power-law envelopes s^(-a/2) on (0,1] and
    s^(-a/2-1) on (1,inf), both inverse-CDF samplable; the acceptance rate is
    at least pi/4 uniformly in the index.
    """
    a = alpha
    w1 = 2.0 / (2.0 - a)
    w2 = 2.0 / a
    p1 = w1 / (w1 + w2)
    out = np.empty(n)
    pending = np.arange(n)
    while pending.size:
        m = pending.size
        pick = rng.random(m)
        u = _uniform_open(rng, m)
        acc = rng.random(m)
        s = np.where(pick < p1, u ** (2.0 / (2.0 - a)), u ** (-2.0 / a))
        accept_prob = np.where(pick < p1, 1.0 / (1.0 + s), s / (1.0 + s))
        ok = acc < accept_prob
        out[pending[ok]] = s[ok]
        pending = pending[~ok]
    return out


def sample_exit_position(alpha, x, rng, size=None):
    """Landing position in (-inf, 0) when the motion leaves the positive
    half-line from x > 0; exact draw from the half-line exit law."""
    a = as_alpha(alpha).value
    g = _as_generator(rng)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("start point must be positive")
    scalar = size is None and x.ndim == 0
    n = x.size if x.ndim else (1 if size is None else int(size))
    s = _exit_ratio(a, g, n)
    return _finish(-x * s if x.ndim else -float(x) * s, scalar)


def sample_return_jump(alpha, z, rng, size=None):
    """Return position in (0, inf) for a jump from z < 0 across the origin.

    Exact inverse CDF: w = |z| (U^(-1/alpha) - 1), matching the survival
    function (|z|/(w+|z|))^alpha.
    """
    a = as_alpha(alpha).value
    g = _as_generator(rng)
    z = np.asarray(z, dtype=float)
    if np.any(z >= 0.0):
        raise ValueError("jump origin must be negative")
    scalar = size is None and z.ndim == 0
    n = z.size if z.ndim else (1 if size is None else int(size))
    u = _uniform_open(g, n)
    w = (np.abs(z) if z.ndim else abs(float(z))) * (u ** (-1.0 / a) - 1.0)
    return _finish(np.asarray(w, dtype=float), scalar)


def sample_hold(alpha, z, rng, size=None):
    """Exponential holding time at z < 0 with rate equal to the jump mass
    into the positive half-line."""
    a = as_alpha(alpha).value
    g = _as_generator(rng)
    z = np.asarray(z, dtype=float)
    if np.any(z >= 0.0):
        raise ValueError("holding point must be negative")
    rate = nu_halfline_mass(a, z)
    scalar = size is None and z.ndim == 0
    n = z.size if z.ndim else (1 if size is None else int(size))
    return _finish(g.standard_exponential(n) / rate, scalar)


def sample_W(alpha, rng, size=None, start: float = 1.0):
    """One reflection ratio W: exit the positive half-line, then jump back.

    Returns (return position) / (start position); the law does not depend on
    the start, which the default start = 1 makes explicit.
    """
    a = as_alpha(alpha).value
    g = _as_generator(rng)
    if start <= 0.0:
        raise ValueError("start must be positive")
    scalar = size is None
    n = 1 if scalar else int(size)
    y = sample_exit_position(a, start, g, size=n)
    w = sample_return_jump(a, np.asarray(y, dtype=float), g)
    out = np.asarray(w, dtype=float) / start
    return _finish(out, scalar)
