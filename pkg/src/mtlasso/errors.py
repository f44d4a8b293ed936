"""Exception hierarchy shared by every module.

Two families matter to callers: ``UsageError`` (bad arguments, bad files,
infeasible configuration) and ``NumericError`` (convergence failures,
singular matrices, violated numerical preconditions).  The CLI maps them to
exit codes 1 and 2 respectively.
"""


class MtlassoError(Exception):
    """Base class for all package errors."""


class UsageError(MtlassoError, ValueError):
    """Invalid input: dimensions, flags, file contents, infeasible config."""


class NumericError(MtlassoError, ArithmeticError):
    """Numerical failure: singularity, loss of positive-definiteness, overflow."""


class ConvergenceError(NumericError):
    """An iterative routine exhausted its budget.

    Carries the last iterate and diagnostics so callers can inspect how far
    the run got.
    """

    def __init__(self, message, *, last_iterate=None, diagnostics=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.diagnostics = diagnostics or {}


class CampaignError(MtlassoError):
    """Too many replicate failures in a Monte-Carlo campaign."""
