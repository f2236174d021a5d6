"""Exception hierarchy shared by all modules."""


class TsiliError(Exception):
    """Base class for toolkit errors."""


class SchemaError(TsiliError):
    """A dataset does not match its declared schema."""


class RowError(TsiliError):
    """A single dataset row could not be parsed."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class StateError(TsiliError):
    """An operation was called before its prerequisite step ran."""


class ConfigError(TsiliError):
    """Invalid run configuration (manifest, flags, mismatched inputs)."""


class BoundError(TsiliError):
    """Input exceeds the size an exhaustive routine accepts."""


class StructureError(TsiliError):
    """Two artifacts that should describe the same instances do not."""
