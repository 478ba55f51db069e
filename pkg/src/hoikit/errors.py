"""Exception taxonomy shared across the package.

Every error carries an ``exit_category`` used by the CLI/service layer:
1 = usage/config, 2 = data, 3 = runtime.
"""


class HoikitError(Exception):
    exit_category = 3


class InvalidInputError(HoikitError):
    """An operation received inputs violating its preconditions."""

    exit_category = 2


class InvalidParameterError(HoikitError):
    """A parameter is outside its documented range (e.g. sigma2 <= 0)."""

    exit_category = 1


class ContractViolationError(HoikitError):
    """An internal contract was violated (e.g. probability mass far from 1)."""

    exit_category = 3


class RejectedInputError(HoikitError):
    """Input rejected by a documented filter (e.g. mask foreground ratio < 0.2)."""

    exit_category = 2


class IngestionError(HoikitError):
    """Fatal data-ingestion failure (e.g. no usable samples in a directory)."""

    exit_category = 2


class ConfigurationError(HoikitError):
    """Bad configuration: unknown key, type mismatch, missing file, bad value."""

    exit_category = 1


class AssemblyError(HoikitError):
    """A composite feature is missing one of its named components."""

    exit_category = 3


class DivergenceError(HoikitError):
    """Training produced a non-finite loss; a diagnostic snapshot is attached."""

    exit_category = 3

    def __init__(self, message, snapshot=None):
        super().__init__(message)
        self.snapshot = snapshot or {}


class MissingArtifactError(HoikitError):
    """A command dependency (checkpoint, dataset file) does not exist."""

    exit_category = 2
