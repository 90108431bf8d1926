"""Budget-constrained error model for the linear ODE u' = lam u.

A training run that reaches residual level ``w(t)`` is assumed to pay
``int_0^T w(t)^-2 dt`` out of a budget ``B``.  The residual feeds the final-time
error through ``int_0^T exp(lam (T - t)) w(t) dt`` and the time-integrated error
through ``int_0^T (exp(lam (T - t)) - 1) / lam * w(t) dt``.

Closed forms for the optimum live next to a discrete constrained minimizer that
knows nothing about them, so each can be checked against the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import SolverError
from .sampling import TruncExpParams, density

LAMBDA_ZERO_TOL = 1e-10
N_QUAD = 10_000


@dataclass(frozen=True)
class BudgetProblem:
    lam: float
    T: float = 1.0
    B: float = 100.0
    n_grid: int = N_QUAD

    def __post_init__(self):
        if not (self.B > 0 and self.T > 0):
            raise ValueError("B and T must be positive")
        if self.n_grid < 100:
            raise ValueError("n_grid must be >= 100")

    @property
    def grid(self) -> np.ndarray:
        """Cell midpoints of a uniform partition of [0, T]."""
        return (np.arange(self.n_grid) + 0.5) * (self.T / self.n_grid)

    @property
    def cell(self) -> float:
        return self.T / self.n_grid


def final_time_kernel(lam: float, T: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda t: np.exp(lam * (T - np.asarray(t, float)))


def integral_metric_kernel(lam: float, T: float) -> Callable[[np.ndarray], np.ndarray]:
    """(exp(lam (T - t)) - 1) / lam, with the lam -> 0 limit T - t."""
    if abs(lam) < LAMBDA_ZERO_TOL:
        return lambda t: T - np.asarray(t, float)
    return lambda t: np.expm1(lam * (T - np.asarray(t, float))) / lam


def _exp_mean_integral(c: float, T: float) -> float:
    # int_0^T exp(c s) ds
    if abs(c) < LAMBDA_ZERO_TOL:
        return T
    return float(np.expm1(c * T) / c)


def error_bound(lam: float, T: float, B: float) -> float:
    """Smallest final-time error reachable with budget ``B``."""
    if not B > 0:
        raise ValueError("B must be positive")
    return _exp_mean_integral(2.0 * lam / 3.0, T) ** 1.5 / np.sqrt(B)


def optimal_profile(lam: float, T: float, B: float, grid) -> np.ndarray:
    """Residual profile kappa * exp(-lam (T - t) / 3) that spends exactly ``B``."""
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(grid > T):
        raise ValueError("grid must lie in [0, T]")
    kappa = np.sqrt(_exp_mean_integral(2.0 * lam / 3.0, T) / B)
    return kappa * np.exp(-lam * (T - grid) / 3.0)


def holder_sides(lam: float, T: float, w: Callable, n: int = N_QUAD) -> tuple[float, float]:
    """Both sides of the Hoelder step ``int e^{2 lam (T-t)/3} <= E^{2/3} C^{1/3}``.

    ``E`` is the induced final-time error of profile ``w`` and ``C`` its cost.
    """
    t = np.linspace(0.0, T, n)
    wt = w(t)
    k = np.exp(lam * (T - t))
    lhs = np.trapezoid(np.exp(2.0 * lam * (T - t) / 3.0), t)
    err = np.trapezoid(k * wt, t)
    cost = np.trapezoid(1.0 / wt ** 2, t)
    return float(lhs), float(err ** (2.0 / 3.0) * cost ** (1.0 / 3.0))


def profile_for_density(rho_vals: np.ndarray, t: np.ndarray, B: float) -> np.ndarray:
    """Residual profile minimizing the rho-weighted loss at cost ``B``: w = c rho^(-1/4)."""
    c = np.sqrt(np.trapezoid(np.sqrt(rho_vals), t) / B)
    return c * rho_vals ** -0.25


def induced_error_for_density(rho: Callable, lam: float, T: float, B: float,
                              n: int = N_QUAD, kernel: Callable | None = None) -> float:
    """Final-time error predicted when training samples times from density ``rho``.

    ``rho`` is a callable on [0, T]; it must be positive there and integrate to one.
    """
    t = np.linspace(0.0, T, n)
    vals = np.asarray(rho(t), dtype=float)
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
        raise ValueError("density must be finite and positive on [0, T]")
    mass = np.trapezoid(vals, t)
    if abs(mass - 1.0) > 1e-6:
        raise ValueError(f"density integrates to {mass}, not 1")
    w = profile_for_density(vals, t, B)
    k = final_time_kernel(lam, T) if kernel is None else kernel
    return float(np.trapezoid(k(t) * w, t))


def truncexp_induced_error(rate: float, lam: float, T: float, B: float, n: int = N_QUAD) -> float:
    law = TruncExpParams(0.0, T, rate)
    return induced_error_for_density(lambda t: density(law, t), lam, T, B, n)


def rate_scan(lam: float, T: float, B: float, rates) -> tuple[np.ndarray, float]:
    """Induced final-time error for each truncated-exponential rate, and the best rate."""
    rates = np.asarray(rates, dtype=float)
    errs = np.array([truncexp_induced_error(r, lam, T, B) for r in rates])
    return errs, float(rates[np.argmin(errs)])


def discrete_budget_oracle(bp: BudgetProblem, kernel: Callable, max_iter: int = 200,
                           rtol: float = 1e-13) -> tuple[float, np.ndarray]:
    """Minimize ``sum k_i w_i h`` subject to ``sum h / w_i^2 = B`` on the midpoint grid.

    Stationarity of the Lagrangian gives ``w_i = (2 mu / k_i)^(1/3)``; the multiplier
    ``mu`` is found by bisection on ``log mu`` so that the budget is met.
    """
    t, h = bp.grid, bp.cell
    k = np.asarray(kernel(t), dtype=float)
    if np.any(~np.isfinite(k)) or np.any(k <= 0):
        raise ValueError("kernel must be positive on the grid")

    def cost(log_mu):
        w = np.exp((np.log(2.0) + log_mu - np.log(k)) / 3.0)
        return float(np.sum(h / w ** 2)), w

    lo, hi = -1.0, 1.0
    while cost(lo)[0] < bp.B:
        lo *= 2.0
        if lo < -1e4:
            raise SolverError("could not bracket the multiplier")
    while cost(hi)[0] > bp.B:
        hi *= 2.0
        if hi > 1e4:
            raise SolverError("could not bracket the multiplier")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        c, w = cost(mid)
        if abs(c - bp.B) <= rtol * bp.B:
            return float(np.sum(k * w) * h), w
        if c > bp.B:
            lo = mid
        else:
            hi = mid
    raise SolverError(f"multiplier bisection did not converge in {max_iter} iterations")


def project_to_budget(w: np.ndarray, bp: BudgetProblem) -> np.ndarray:
    """Rescale a profile so that it spends exactly the budget."""
    return w * np.sqrt(np.sum(bp.cell / w ** 2) / bp.B)


def integral_metric_density(lam: float, T: float, grid) -> np.ndarray:
    """Optimal sampling density when the target is the time-integrated error.

    Proportional to ``|exp(-lam t) - exp(-lam T)|^(4/3)``, i.e. to the integral-metric
    kernel to the power 4/3; vanishes at ``t = T``.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(grid > T):
        raise ValueError("grid must lie in [0, T]")
    k = integral_metric_kernel(lam, T)
    norm, _ = quad(lambda s: float(k(s)) ** (4.0 / 3.0), 0.0, T, epsabs=0.0, epsrel=1e-13, limit=200)
    return np.abs(k(grid)) ** (4.0 / 3.0) / norm
