"""Truncated exponential law on an interval [a, b] with density proportional to exp(-r t).

The rate ``r`` may be zero (uniform law) or negative (mass pushed towards ``b``).
Everything here is a pure function of its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# below this |r| the uniform limit is used instead of the exponential formulas
RATE_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class TruncExpParams:
    a: float
    b: float
    r: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and np.isfinite(self.r)):
            raise ValueError(f"non-finite parameters {self}")
        if not self.a < self.b:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")

    @property
    def is_uniform(self) -> bool:
        return abs(self.r) < RATE_ZERO_TOL


def _norm_const(p: TruncExpParams) -> float:
    # r / (exp(-r a) - exp(-r b)), rewritten around a to avoid overflow for large |r| a
    # exp(-r t) / (exp(-r a) - exp(-r b)) = exp(-r (t - a)) / (1 - exp(-r (b - a)))
    return p.r / -np.expm1(-p.r * (p.b - p.a))


def density(p: TruncExpParams, t):
    """Probability density at ``t`` (scalar or array); zero outside [a, b]."""
    t = np.asarray(t, dtype=float)
    inside = (t >= p.a) & (t <= p.b)
    if p.is_uniform:
        val = np.full_like(t, 1.0 / (p.b - p.a))
    else:
        val = _norm_const(p) * np.exp(-p.r * (t - p.a))
    out = np.where(inside, val, 0.0)
    return out[()] if out.ndim == 0 else out


def cdf(p: TruncExpParams, t):
    t = np.asarray(t, dtype=float)
    s = np.clip(t, p.a, p.b) - p.a
    if p.is_uniform:
        out = s / (p.b - p.a)
    else:
        out = np.expm1(-p.r * s) / np.expm1(-p.r * (p.b - p.a))
    return out[()] if out.ndim == 0 else out


def quantile(p: TruncExpParams, q):
    """Inverse of :func:`cdf`; ``q`` must lie in [0, 1]."""
    q = np.asarray(q, dtype=float)
    if np.any(~np.isfinite(q)) or np.any(q < 0.0) or np.any(q > 1.0):
        raise ValueError("quantile level outside [0, 1]")
    width = p.b - p.a
    if p.is_uniform:
        out = p.a + q * width
    else:
        # -log(1 - q + q exp(-r w)) / r, with log1p/expm1 for small r w
        out = p.a - np.log1p(q * np.expm1(-p.r * width)) / p.r
        out = np.clip(out, p.a, p.b)
    return out[()] if out.ndim == 0 else out


def quantile_grid(p: TruncExpParams, n: int) -> np.ndarray:
    """Deterministic collocation set: quantiles at the midpoint levels (i + 1/2)/n."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    levels = (np.arange(n) + 0.5) / n
    return np.asarray(quantile(p, levels), dtype=float).reshape(n)


def density_weights(p: TruncExpParams, grid) -> np.ndarray:
    """Weights proportional to exp(-r t_i), normalized to sum to one."""
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < p.a) or np.any(grid > p.b):
        raise ValueError("grid point outside [a, b]")
    logw = -p.r * (grid - p.a)
    w = np.exp(logw - logw.max())
    return w / w.sum()


def mean(p: TruncExpParams) -> float:
    """Analytic mean of the law."""
    if p.is_uniform:
        return 0.5 * (p.a + p.b)
    w = p.b - p.a
    # E[t - a] = 1/r - w exp(-r w) / (1 - exp(-r w)) = 1/r - w / expm1(r w)
    return p.a + 1.0 / p.r - w / np.expm1(p.r * w)
