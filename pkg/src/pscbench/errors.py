"""Exception types mapped to process exit codes.

The CLI translates these into exit statuses so batch drivers can tell a
violated geometric hypothesis from a numerical breakdown or a bad config.
"""


class PscbenchError(Exception):
    """Base for all workbench errors."""

    exit_code = 1


class HypothesisViolation(PscbenchError):
    """A geometric hypothesis of the construction fails on the given data.

    Raised when the maximum angle reaches pi/4 or the ellipticity margin
    drops below threshold.
    """

    exit_code = 2


class NumericalFailure(PscbenchError):
    """Numerics broke down.

    Singular factorization, residual above tolerance, non-SPD metric data,
    or a frame that fails its unit/orthogonality validation.
    """

    exit_code = 3


class ConfigError(PscbenchError):
    """Invalid run configuration, or a grid too coarse for a requested
    quantity."""

    exit_code = 4
