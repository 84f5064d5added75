"""Exception hierarchy shared across the library and the CLI.

The CLI maps these onto process exit codes: config/contract problems
exit with 2, data problems with 3, numerical divergence with 4.
"""


class DelaySnnError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ContractError(DelaySnnError, ValueError):
    """An operation was called with arguments violating its contract."""

    exit_code = 2


class ConfigError(DelaySnnError):
    """Invalid run configuration, schema violation, or version mismatch."""

    exit_code = 2


class DataError(DelaySnnError):
    """Malformed or missing dataset/event files."""

    exit_code = 3


class DivergenceError(DelaySnnError):
    """Training produced a non-finite loss."""

    exit_code = 4
