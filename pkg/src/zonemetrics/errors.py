"""Exception hierarchy. The CLI maps these onto exit codes."""


class ZoneMetricsError(Exception):
    """Base class for all package errors."""


class InputError(ZoneMetricsError, ValueError):
    """An argument violates an operation's precondition."""


class ConfigError(InputError):
    """Inconsistent or incomplete run/assigner configuration."""


class ContractError(InputError):
    """Caller broke an ordering or shape contract (e.g. unsorted detections)."""


class ParseError(ZoneMetricsError):
    """Malformed JSON; ``offset`` is the byte offset of the failure."""

    def __init__(self, path, offset, msg):
        self.path = path
        self.offset = offset
        super().__init__(f"{path}: invalid JSON at byte {offset}: {msg}")


class SchemaError(ZoneMetricsError):
    """A required key is missing or has the wrong type."""


class IntegrityError(ZoneMetricsError):
    """Dangling id references between records."""

    def __init__(self, msg, offenders=()):
        self.offenders = list(offenders)
        super().__init__(msg)


class RangeError(ZoneMetricsError):
    """A numeric field lies outside its allowed range."""
