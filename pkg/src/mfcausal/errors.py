"""Exception taxonomy with stable categories and process exit codes.

Every error raised by this package derives from MFCausalError. The CLI maps
an error to a machine-readable category string and a process exit code, so
callers can dispatch on failures without parsing messages.
"""


class MFCausalError(Exception):
    """Base class for all package errors."""

    category = "internal"
    exit_code = 1


class UsageError(MFCausalError):
    """Bad command-line usage: unknown flag, subcommand, or system name."""

    category = "usage"
    exit_code = 2


class ValidationError(MFCausalError):
    """Invalid argument or input data (shape, range, degenerate variance)."""

    category = "validation"
    exit_code = 3


class NumericalError(MFCausalError):
    """Numerical failure: singular or ill-conditioned matrix, rank deficiency."""

    category = "numerical"
    exit_code = 4


class SimulationError(MFCausalError):
    """Simulation failure: divergent trajectory, no bounded orbit found."""

    category = "simulation"
    exit_code = 5
