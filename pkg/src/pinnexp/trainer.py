"""Full-batch Adam training of the PINN loss."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DivergedError
from .net import MlpSpec, init_glorot
from .problems import Problem, SamplingMode, assemble_loss, build_loss

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 500
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    # Keras default rather than the textbook 1e-8
    epsilon: float = 1e-7
    seed: int = 0
    history_stride: int = 10

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.history_stride < 1:
            raise ValueError("history_stride must be >= 1")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    k: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


@dataclass
class TrainRecord:
    iteration: int
    loss: float
    final_error: float = math.nan
    integral_error: float = math.nan


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray,
              cfg: TrainConfig) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected Adam update; returns new state and parameters (inputs untouched)."""
    if grad.shape != params.shape or state.m.shape != params.shape:
        raise ValueError("shape mismatch between state, params and grad")
    k = state.k + 1
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * (grad * grad)
    m_hat = m / (1.0 - cfg.beta1 ** k)
    v_hat = v / (1.0 - cfg.beta2 ** k)
    new = params - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    if not np.all(np.isfinite(new)):
        raise DivergedError("non-finite Adam update", iteration=k, params=params)
    return AdamState(m, v, k), new


# oracle(params) -> (final_error, integral_error)
Oracle = Callable[[np.ndarray], tuple[float, float]]


@dataclass
class TrainResult:
    params: np.ndarray
    history: list[TrainRecord] = field(default_factory=list)
    initial_params: Optional[np.ndarray] = None

    @property
    def final_loss(self) -> float:
        return self.history[-1].loss


def train(problem: Problem, spec: MlpSpec, mode: SamplingMode, cfg: TrainConfig,
          oracle: Oracle | None = None, params: np.ndarray | None = None) -> TrainResult:
    """Run ``cfg.iterations`` Adam steps from the Glorot init keyed by ``cfg.seed``.

    History rows are recorded at iteration 0, every ``history_stride`` steps and at
    the last iteration; the loss in a row is evaluated at the parameters of that
    iteration.  On a non-finite loss a :class:`DivergedError` is raised carrying the
    last finite parameters and the history so far.
    """
    if params is None:
        params = init_glorot(spec, cfg.seed)
    params = np.array(params, dtype=float)
    init = params.copy()
    loss_fn = build_loss(problem, mode)
    state = AdamState.zeros(params.size)
    history: list[TrainRecord] = []

    def record(it, loss):
        rec = TrainRecord(it, loss)
        if oracle is not None:
            rec.final_error, rec.integral_error = oracle(params)
        history.append(rec)

    for it in range(cfg.iterations + 1):
        try:
            loss, grad = assemble_loss(problem, spec, params, mode, loss_fn)
        except DivergedError as exc:
            raise DivergedError(f"{exc} at iteration {it}", it, params, history) from exc
        if it % cfg.history_stride == 0 or it == cfg.iterations:
            record(it, loss)
        if it == cfg.iterations:
            break
        try:
            state, params = adam_step(state, params, grad, cfg)
        except DivergedError as exc:
            raise DivergedError(f"{exc} at iteration {it + 1}", it + 1, params, history) from exc
        if it and it % 1000 == 0:
            log.debug("iteration %d loss %.6g", it, loss)
    return TrainResult(params, history, init)


HISTORY_FIELDS = ("iteration", "loss", "final_error", "integral_error")


def write_history(path, history: list[TrainRecord]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(HISTORY_FIELDS)
        for rec in history:
            w.writerow([rec.iteration] + [repr(float(getattr(rec, k))) for k in HISTORY_FIELDS[1:]])
