"""Exception hierarchy shared across the package.

Exit-code mapping for the CLI: validation errors exit 1, compute errors
(iteration caps, failed convergence) exit 2, invariant breaches exit 3.
"""


class DwalkError(Exception):
    exit_code = 2


class ValidationError(DwalkError):
    """Bad input: malformed file, violated precondition, invalid parameter."""

    exit_code = 1


class ComputeError(DwalkError):
    """A computation could not finish: step cap hit, iteration limit, no convergence."""

    exit_code = 2


class InvariantError(DwalkError):
    """An internal self-check failed; indicates a bug, not bad input."""

    exit_code = 3
