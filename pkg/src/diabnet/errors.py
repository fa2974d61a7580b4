"""Error taxonomy shared by the library and the command-line interface.

Each subclass maps to a distinct process exit code so shell callers can
distinguish bad configuration from bad data from numerical failure.
"""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(PipelineError):
    """Invalid, missing, or contradictory configuration."""

    exit_code = 1


class DataError(PipelineError):
    """Malformed input data: unparseable CSV cells, wrong column counts,
    empty files, impossible imputation, degenerate class distributions."""

    exit_code = 2


class NumericsError(PipelineError):
    """Numerical failure during training or evaluation: non-finite loss,
    domain violations inside a fitted model."""

    exit_code = 3
