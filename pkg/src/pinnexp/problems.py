"""Benchmark problems: residuals, the initial-condition shift and the sampled PINN loss.

Every network output is shifted as ``U(t, .) - U(0, .) + u0(.)`` so the initial
condition holds exactly; the loss is the (weighted) mean square residual over the
collocation times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DivergedError
from .net import Jet, JetLoss, MlpSpec, evaluate, loss_gradient
from .sampling import TruncExpParams, density_weights, quantile_grid


@dataclass(frozen=True)
class LinearOde:
    lam: float = 2.0
    u0: float = math.sqrt(15.0)
    T: float = 1.0

    input_dim = 1
    output_dim = 1

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")


@dataclass(frozen=True)
class Burgers:
    nu: float = 0.01 / math.pi
    T: float = 1.0
    c_bc: float = 1.0
    n_space: int = 25
    n_time: int = 50

    input_dim = 2
    output_dim = 1

    def __post_init__(self):
        if not self.nu > 0 or not self.T > 0:
            raise ValueError("nu and T must be positive")
        if self.c_bc < 0:
            raise ValueError("c_bc must be >= 0")
        if self.n_space < 2 or self.n_time < 2:
            raise ValueError("need at least 2 space and 2 time points")

    @staticmethod
    def u0(x):
        return -np.sin(np.pi * x)

    @staticmethod
    def u0_x(x):
        return -np.pi * np.cos(np.pi * x)

    @staticmethod
    def u0_xx(x):
        return np.pi ** 2 * np.sin(np.pi * x)

    def space_points(self) -> np.ndarray:
        return -1.0 + 2.0 * (np.arange(self.n_space) + 0.5) / self.n_space


@dataclass(frozen=True)
class Lorenz:
    sigma: float = 10.0
    rho_lorenz: float = 28.0
    beta: float = 8.0 / 3.0
    init: tuple[float, float, float] = (1.0, 1.0, 1.0)
    T: float = 1.0
    n_time: int = 100

    input_dim = 1
    output_dim = 3

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.n_time < 2:
            raise ValueError("need at least 2 time points")

    def rhs(self, u: np.ndarray) -> np.ndarray:
        x, y, z = u[..., 0], u[..., 1], u[..., 2]
        return np.stack([self.sigma * (y - x),
                         x * (self.rho_lorenz - z) - y,
                         x * y - self.beta * z], axis=-1)

    def rhs_vjp(self, u: np.ndarray, g: np.ndarray) -> np.ndarray:
        """``J(u)^T g`` for the Jacobian ``J`` of :meth:`rhs`, row by row."""
        x, y, z = u[..., 0], u[..., 1], u[..., 2]
        g0, g1, g2 = g[..., 0], g[..., 1], g[..., 2]
        s, b = self.sigma, self.beta
        return np.stack([-s * g0 + (self.rho_lorenz - z) * g1 + y * g2,
                         s * g0 - g1 + x * g2,
                         -x * g1 - b * g2], axis=-1)


Problem = Union[LinearOde, Burgers, Lorenz]


@dataclass(frozen=True)
class QuantileGrid:
    """Collocation times at the quantiles of the law, equal weights."""
    law: TruncExpParams
    n: int


@dataclass(frozen=True)
class WeightedUniform:
    """Uniform midpoint times, weighted by the law's density (normalized)."""
    law: TruncExpParams
    n: int


SamplingMode = Union[QuantileGrid, WeightedUniform]


def time_points(mode: SamplingMode) -> tuple[np.ndarray, np.ndarray]:
    """Collocation times and their loss weights (summing to one)."""
    if isinstance(mode, QuantileGrid):
        t = quantile_grid(mode.law, mode.n)
        return t, np.full(mode.n, 1.0 / mode.n)
    if isinstance(mode, WeightedUniform):
        law = mode.law
        t = quantile_grid(TruncExpParams(law.a, law.b, 0.0), mode.n)
        return t, density_weights(law, t)
    raise TypeError(f"unknown sampling mode {mode!r}")


def default_mode(problem: Problem, rate: float, n: int | None = None,
                 weighted: bool | None = None) -> SamplingMode:
    """The sampling each benchmark uses by default: density weights for Lorenz, quantiles otherwise."""
    if weighted is None:
        weighted = isinstance(problem, Lorenz)
    if n is None:
        n = 100 if isinstance(problem, LinearOde) else problem.n_time
    law = TruncExpParams(0.0, problem.T, rate)
    return (WeightedUniform if weighted else QuantileGrid)(law, n)


def _initial_value(problem) -> np.ndarray:
    if isinstance(problem, LinearOde):
        return np.array([problem.u0])
    return np.asarray(problem.init, dtype=float)


def shifted_eval(problem: Problem, spec: MlpSpec, params, inputs, want=("dt",)) -> Jet:
    """Jet of the shifted network, which matches the initial condition exactly."""
    if isinstance(problem, Burgers):
        X = np.atleast_2d(np.asarray(inputs, dtype=float))
        single = np.ndim(inputs) == 1
        X0 = np.column_stack([np.zeros(len(X)), X[:, 1]])
        want0 = tuple(w for w in want if w != "dt")
        j = evaluate(spec, params, X, want)
        j0 = evaluate(spec, params, X0, want0)
        x = X[:, 1:2]
        out = Jet(j.value - j0.value + Burgers.u0(x), j.dt,
                  None if j.dx is None else j.dx - j0.dx + Burgers.u0_x(x),
                  None if j.dxx is None else j.dxx - j0.dxx + Burgers.u0_xx(x))
        return out[0] if single else out
    t = np.asarray(inputs, dtype=float)
    single = t.ndim == 0
    j = evaluate(spec, params, t.reshape(-1, 1), want)
    v0 = evaluate(spec, params, np.zeros((1, 1)), ()).value
    out = Jet(j.value - v0 + _initial_value(problem), j.dt)
    return out[0] if single else out


def residual_linear(problem: LinearOde, spec, params, t):
    j = shifted_eval(problem, spec, params, t)
    return (j.dt - problem.lam * j.value)[..., 0]


def residual_burgers(problem: Burgers, spec, params, t, x):
    t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
    X = np.column_stack([t.ravel(), x.ravel()])
    j = shifted_eval(problem, spec, params, X, ("dt", "dx", "dxx"))
    r = j.dt + j.value * j.dx - problem.nu * j.dxx
    return r[:, 0].reshape(t.shape)


def residual_lorenz(problem: Lorenz, spec, params, t):
    j = shifted_eval(problem, spec, params, t)
    return j.dt - problem.rhs(j.value)


def _ode_loss(problem, mode) -> JetLoss:
    t, w = time_points(mode)
    u_init = _initial_value(problem)

    def fn(jets):
        j, j0 = jets
        u = j.value - j0.value + u_init
        if isinstance(problem, LinearOde):
            r = j.dt - problem.lam * u
        else:
            r = j.dt - problem.rhs(u)
        loss = float(np.sum(w[:, None] * r * r))
        g = 2.0 * w[:, None] * r
        if isinstance(problem, LinearOde):
            gu = -problem.lam * g
        else:
            gu = -problem.rhs_vjp(u, g)
        return loss, [Jet(gu, g), Jet(-gu.sum(axis=0, keepdims=True))]

    return JetLoss([(t, ("dt",)), (np.zeros(1), ())], fn)


def _burgers_loss(problem: Burgers, mode) -> JetLoss:
    t, w = time_points(mode)
    xs = problem.space_points()
    nt, nx = len(t), len(xs)
    TT, XX = np.meshgrid(t, xs, indexing="ij")
    colloc = np.column_stack([TT.ravel(), XX.ravel()])
    zero_x = np.column_stack([np.zeros(nx), xs])
    TB, XB = np.meshgrid(t, [-1.0, 1.0], indexing="ij")
    bnd = np.column_stack([TB.ravel(), XB.ravel()])
    zero_b = np.array([[0.0, -1.0], [0.0, 1.0]])
    u0, u0x, u0xx = Burgers.u0(xs), Burgers.u0_x(xs), Burgers.u0_xx(xs)
    wt = (w[:, None] / nx)
    nu, c_bc = problem.nu, problem.c_bc

    def fn(jets):
        jc, j0, jb, jb0 = jets
        sh = (nt, nx)
        U = jc.value.reshape(sh) - j0.value[:, 0] + u0
        Ux = jc.dx.reshape(sh) - j0.dx[:, 0] + u0x
        Uxx = jc.dxx.reshape(sh) - j0.dxx[:, 0] + u0xx
        r = jc.dt.reshape(sh) + U * Ux - nu * Uxx
        g = 2.0 * wt * r
        ub = jb.value.reshape(nt, 2) - jb0.value[:, 0]
        loss = float(np.sum(wt * r * r)) + c_bc * float(np.mean(ub * ub))
        gb = c_bc * 2.0 * ub / ub.size
        gU, gUx, gUxx = g * Ux, g * U, -nu * g
        col = lambda a: a.reshape(-1, 1)
        return loss, [
            Jet(col(gU), col(g), col(gUx), col(gUxx)),
            Jet(-col(gU.sum(axis=0)), None, -col(gUx.sum(axis=0)), -col(gUxx.sum(axis=0))),
            Jet(col(gb)),
            Jet(-col(gb.sum(axis=0))),
        ]

    return JetLoss([(colloc, ("dt", "dx", "dxx")), (zero_x, ("dx", "dxx")),
                    (bnd, ()), (zero_b, ())], fn)


def build_loss(problem: Problem, mode: SamplingMode) -> JetLoss:
    """The sampled PINN loss as a :class:`JetLoss` (usable by ``net.grad_check``)."""
    if not math.isclose(mode.law.b - mode.law.a, problem.T) or mode.law.a != 0.0:
        raise ValueError("sampling law must live on [0, T]")
    if isinstance(problem, Burgers):
        return _burgers_loss(problem, mode)
    if isinstance(problem, (LinearOde, Lorenz)):
        return _ode_loss(problem, mode)
    raise TypeError(f"unknown problem {problem!r}")


def assemble_loss(problem: Problem, spec: MlpSpec, params, mode: SamplingMode,
                  loss: JetLoss | None = None) -> tuple[float, np.ndarray]:
    """Loss value and parameter gradient; raises :class:`DivergedError` on non-finite output."""
    if loss is None:
        loss = build_loss(problem, mode)
    value, grad = loss_gradient(spec, params, loss)
    if not (np.isfinite(value) and np.all(np.isfinite(grad))):
        raise DivergedError(f"non-finite loss {value}")
    return value, grad
