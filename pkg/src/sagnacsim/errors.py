"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4. Plain ValueError is used for domain errors on
operation inputs (out-of-range parameters) and is treated as a config
error when it surfaces while loading a configuration.
"""


class SagnacsimError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(SagnacsimError):
    """Invalid or malformed configuration."""


class DataError(SagnacsimError):
    """Input data cannot support the requested operation.

    Examples: empty spectrum, all-zero histogram ("no peak"), all-zero
    fringe ("no signal"), ruler shorter than the scanned delays,
    degenerate length scans ("unidentifiable").
    """


class NumericalError(SagnacsimError):
    """A numerical routine failed to converge."""
