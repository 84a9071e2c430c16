"""Exception hierarchy.

``InputError`` subclasses map to CLI exit status 2 (bad input or failed
validation); everything else under ``FiresightError`` maps to exit status 1.
"""


class FiresightError(Exception):
    """Base class for all pipeline errors."""


class InputError(FiresightError):
    """Bad input data, configuration, or validation failure."""


class FormatError(InputError):
    """A file does not conform to its documented format."""


class RowError(InputError):
    """A single record is unparsable or violates an invariant."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class ConflictError(InputError):
    """Duplicate identifier or duplicate (key, date) record."""


class AlignmentError(InputError):
    """Datasets that must share georeferencing or dates do not."""


class UnitError(InputError):
    """A value is implausible for its declared unit."""


class PreconditionError(InputError):
    """An operation was called outside its documented preconditions."""


class UnitLockError(InputError):
    """A context field failed the canonical-unit plausibility gate."""

    def __init__(self, slot: str, message: str):
        super().__init__(f"{slot}: {message}")
        self.slot = slot


class SchemaError(InputError):
    """Unknown slot name in the fixed perception schema."""


class ClientError(FiresightError):
    """Completion client failed (network, transport, or exhausted replay)."""


class ReplayExhaustedError(ClientError):
    """Replay transcript has no more responses."""


class FallbackUnavailableError(FiresightError):
    """Validation never succeeded and no analogs exist to fall back on."""


class DegenerateFitError(FiresightError):
    """Linear calibration attempted on constant scores."""
