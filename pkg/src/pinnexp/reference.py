"""Reference solutions (closed form, finite differences, RK4) and error metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline, RegularGridInterpolator

from .errors import SolverError
from .net import MlpSpec
from .problems import Burgers, LinearOde, Lorenz, Problem, shifted_eval

N_METRIC = 256


def exact_linear(problem: LinearOde, t):
    return problem.u0 * np.exp(problem.lam * np.asarray(t, dtype=float))


@dataclass
class BurgersField:
    """Snapshots ``u[k, i]`` at times ``t[k]`` and nodes ``x[i]``; linear interpolation in between."""
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        self._interp = RegularGridInterpolator((self.t, self.x), self.u, method="linear")

    def __call__(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        return self._interp(np.stack([t.ravel(), x.ravel()], axis=-1)).reshape(t.shape)


def _symmetric_grid(n: int) -> np.ndarray:
    # mirror the right half so that x[i] == -x[n-1-i] exactly
    x = np.linspace(-1.0, 1.0, n)
    half = n // 2
    x[:half] = -x[::-1][:half]
    if n % 2:
        x[half] = 0.0
    return x


def _burgers_rhs(u, dx, nu):
    f = 0.5 * u * u
    out = np.zeros_like(u)
    # conservative central advection; (a + c) - 2b keeps mirror symmetry bit-exact
    out[1:-1] = (-(f[2:] - f[:-2]) / (2.0 * dx)
                 + nu * ((u[2:] + u[:-2]) - 2.0 * u[1:-1]) / (dx * dx))
    return out


def solve_burgers_fd(nu: float, n_grid: int, T: float, n_snapshots: int = 101) -> BurgersField:
    """Viscous Burgers on [-1, 1] with u(0, x) = -sin(pi x) and zero Dirichlet data.

    Central differences in space (conservative flux for advection), SSP-RK3 in time
    with ``dt <= min(0.4 dx^2 / nu, 0.4 dx / max|u|)``; snapshots are hit exactly.
    """
    if n_grid < 256:
        raise ValueError("n_grid must be >= 256")
    x = _symmetric_grid(n_grid)
    dx = 2.0 / (n_grid - 1)
    u = -np.sin(np.pi * x)
    u[0] = u[-1] = 0.0
    times = np.linspace(0.0, T, n_snapshots)
    snaps = np.empty((n_snapshots, n_grid))
    snaps[0] = u
    for k in range(1, n_snapshots):
        span = times[k] - times[k - 1]
        umax = max(np.max(np.abs(u)), 1e-12)
        dt_max = min(0.4 * dx * dx / nu, 0.4 * dx / umax)
        n_sub = max(1, math.ceil(span / dt_max))
        dt = span / n_sub
        for _ in range(n_sub):
            u1 = u + dt * _burgers_rhs(u, dx, nu)
            u2 = 0.75 * u + 0.25 * (u1 + dt * _burgers_rhs(u1, dx, nu))
            u = u / 3.0 + 2.0 / 3.0 * (u2 + dt * _burgers_rhs(u2, dx, nu))
        if not np.all(np.isfinite(u)):
            raise SolverError(f"Burgers solver blew up before t={times[k]:.4g}")
        snaps[k] = u
    return BurgersField(times, x, snaps)


def rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        self._spline = CubicHermiteSpline(self.t, self.y, self.dy, axis=0)

    def __call__(self, t):
        return self._spline(np.asarray(t, dtype=float))


def solve_lorenz_rk4(problem: Lorenz, h: float = 1e-3, init=None) -> Trajectory:
    """Classical RK4 on [0, T]; the last step is shortened to land on T."""
    if not h > 0:
        raise ValueError("h must be positive")
    n = max(1, math.ceil(problem.T / h - 1e-9))
    ts = np.linspace(0.0, problem.T, n + 1)
    y = np.asarray(problem.init if init is None else init, dtype=float)
    ys = np.empty((n + 1, 3))
    ys[0] = y
    for k in range(n):
        y = rk4_step(problem.rhs, y, ts[k + 1] - ts[k])
        ys[k + 1] = y
    return Trajectory(ts, ys, problem.rhs(ys))


def reference_for(problem: Problem, n_grid: int = 1024, h: float = 1e-3):
    """The oracle used for error metrics of ``problem``."""
    if isinstance(problem, LinearOde):
        return lambda t: exact_linear(problem, t)
    if isinstance(problem, Burgers):
        return solve_burgers_fd(problem.nu, n_grid, problem.T)
    if isinstance(problem, Lorenz):
        return solve_lorenz_rk4(problem, h)
    raise TypeError(f"unknown problem {problem!r}")


def _pointwise_errors(problem, spec, params, reference, ts):
    if isinstance(problem, Burgers):
        xs = np.linspace(-1.0, 1.0, N_METRIC)
        TT, XX = np.meshgrid(ts, xs, indexing="ij")
        X = np.column_stack([TT.ravel(), XX.ravel()])
        u = shifted_eval(problem, spec, params, X, ()).value[:, 0].reshape(TT.shape)
        diff = u - reference(TT, XX)
        # L2 norm in x on [-1, 1]
        return np.sqrt(np.trapezoid(diff * diff, xs, axis=1))
    u = shifted_eval(problem, spec, params, ts, ()).value
    ref = np.asarray(reference(ts), dtype=float).reshape(len(ts), -1)
    return np.linalg.norm(u - ref, axis=1)


def error_metrics(problem: Problem, spec: MlpSpec, params, reference) -> tuple[float, float]:
    """``(final_error, integral_error)`` of the shifted network against ``reference``.

    The final error is the norm of the mismatch at ``T`` (absolute value, Euclidean
    norm for Lorenz, L2-in-x for Burgers); the integral error is the trapezoid of the
    same pointwise norm over 256 uniform times.
    """
    ts = np.linspace(0.0, problem.T, N_METRIC)
    err = _pointwise_errors(problem, spec, params, reference, ts)
    return float(err[-1]), float(np.trapezoid(err, ts))


def make_oracle(problem: Problem, spec: MlpSpec, reference):
    return lambda params: error_metrics(problem, spec, params, reference)
