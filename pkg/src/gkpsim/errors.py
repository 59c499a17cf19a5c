"""Exception hierarchy for the simulation engine.

Every contract breach raises a subclass of GkpsimError so callers (and the
CLI) can map failures to exit codes without string matching.
"""


class GkpsimError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(GkpsimError):
    """Fock truncation dimension is missing, zero, or too small."""


class InvalidParameterError(GkpsimError):
    """A physical or numerical parameter is outside its admissible range."""


class InvalidRequestError(GkpsimError):
    """The request is structurally invalid for the given lattice dimension."""


class ContractViolationError(GkpsimError):
    """An input violates a declared type contract (e.g. hermiticity tag)."""


class ShapeMismatchError(GkpsimError):
    """Operator or state shapes do not match."""


class UnsupportedError(GkpsimError):
    """The operation is out of scope by design (e.g. mixed-target fidelity)."""


class TruncationError(GkpsimError):
    """The Fock truncation drops too much weight.

    Carries the measured dropped tail weight in ``tail_weight``.
    """

    def __init__(self, message, tail_weight):
        super().__init__(message)
        self.tail_weight = float(tail_weight)


class StiffFailureError(GkpsimError):
    """Adaptive step size underflowed; carries the last valid time."""

    def __init__(self, message, last_time):
        super().__init__(message)
        self.last_time = float(last_time)


class InvariantBreachError(GkpsimError):
    """A trajectory invariant (trace, positivity) broke beyond 1e-4."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class NonConvergenceError(GkpsimError):
    """Steady-state residual plateaued above tolerance.

    Carries the best state reached and its residual.
    """

    def __init__(self, message, best_state=None, residual=None):
        super().__init__(message)
        self.best_state = best_state
        self.residual = residual


class RefinementFailureError(GkpsimError):
    """Grid refinement did not converge; carries the value sequence."""

    def __init__(self, message, values=None):
        super().__init__(message)
        self.values = values


class CertificationFailureError(GkpsimError):
    """Energy-bound certificate unstable under cutoff refinement."""

    def __init__(self, message, data=None):
        super().__init__(message)
        self.data = data


class UnderflowHorizonError(GkpsimError):
    """Contrast fell below resolvable level before the fit window opened."""


class SweepFailureError(GkpsimError):
    """Fewer than the minimum number of sweep cells produced valid fits."""


# CLI exit codes (shared with the command-line front end).
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INSUFFICIENT_DATA = 4
