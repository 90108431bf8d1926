class NumericalError(RuntimeError):
    """Base class for numerical failures (mapped to CLI exit code 3)."""


class DivergedError(NumericalError):
    """Training produced a non-finite loss or update.

    ``params`` is the last finite iterate and ``history`` the records gathered so far.
    """

    def __init__(self, message, iteration=None, params=None, history=None):
        super().__init__(message)
        self.iteration = iteration
        self.params = params
        self.history = history if history is not None else []


class SolverError(NumericalError):
    pass
