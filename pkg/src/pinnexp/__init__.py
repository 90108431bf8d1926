"""Physics-informed networks with truncated-exponential time sampling.

Modules: ``sampling`` (the truncated exponential law), ``net`` (tanh MLP with a
forward jet and reverse-mode gradients), ``problems`` (linear ODE, Burgers,
Lorenz losses), ``trainer`` (full-batch Adam), ``reference`` (oracle solvers),
``theory`` (optimal sampling under a residual budget) and ``cli``.
"""

from .errors import DivergedError, NumericalError, SolverError
from .net import MlpSpec, evaluate, init_glorot
from .problems import Burgers, LinearOde, Lorenz, default_mode
from .sampling import TruncExpParams
from .trainer import TrainConfig, train

__version__ = "0.1.0"

__all__ = ["Burgers", "DivergedError", "LinearOde", "Lorenz", "MlpSpec", "NumericalError",
           "SolverError", "TrainConfig", "TruncExpParams", "default_mode", "evaluate",
           "init_glorot", "train"]
