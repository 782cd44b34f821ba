"""Exception hierarchy shared by all pipeline stages.

Domain errors (bad inputs, contract violations) map to CLI exit code 1;
IO and service errors map to exit code 2.
"""


class AstrosetError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(AstrosetError):
    """Invalid inputs or violated stage contracts (exit code 1)."""


class InvalidInput(DomainError):
    pass


class UnknownClass(DomainError):
    pass


class LayoutError(DomainError):
    pass


class EmptyDataset(DomainError):
    pass


class DimensionError(DomainError):
    pass


class ChannelError(DomainError):
    pass


class TooSmall(DomainError):
    pass


class InvalidWeight(DomainError):
    pass


class StageError(DomainError):
    pass


class TaxonomyError(DomainError):
    pass


class ConfigError(DomainError):
    """Config file / flag validation failure; message carries the field path."""


class IoError(AstrosetError):
    """Filesystem failure; message carries the offending path (exit code 2)."""


class ServiceUnavailable(AstrosetError):
    """Remote service unreachable after the configured retries (exit code 2)."""


class ProtocolViolation(AstrosetError):
    """Remote service answered outside its wire contract (exit code 2)."""


class PartialFailure(AstrosetError):
    """A dataset-level stage failed for a subset of records; nothing was committed.

    Carries the ids that failed so the operator can retry or exclude them.
    """

    def __init__(self, message: str, failed_ids: list[str]):
        super().__init__(message)
        self.failed_ids = list(failed_ids)
