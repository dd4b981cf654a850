"""
errors.py — Error hierarchy shared by every package in the toolkit

Every failure the library raises on purpose derives from TckToolkitError,
so the CLI can turn them into a one-line message and a non-zero exit code
while unexpected bugs still surface with a traceback.
"""

from typing import Optional


class TckToolkitError(Exception):
    """Base class for all deliberate toolkit failures."""


# ── Data model and ingestion ─────────────────────────────────


class SchemaError(TckToolkitError):
    """A CSV header is missing a required column."""

    def __init__(self, column: str, path: str = ""):
        self.column = column
        where = f" in {path}" if path else ""
        super().__init__(f"missing column '{column}'{where}")


class ParseError(TckToolkitError):
    """A CSV cell could not be parsed as a number."""

    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        super().__init__(f"row {row}: column '{column}' has non-numeric value {value!r}")


class DuplicateRowError(TckToolkitError):
    """Two CSV rows share the same (id, day)."""

    def __init__(self, record_id: str, day: int, row: int):
        self.record_id = record_id
        self.day = day
        self.row = row
        super().__init__(f"row {row}: duplicate row for id '{record_id}' day {day}")


class AlignmentError(TckToolkitError):
    """A stay cannot be placed into its observation window."""

    def __init__(self, record_id: str, reason: str):
        self.record_id = record_id
        super().__init__(f"cannot align '{record_id}': {reason}")


class StratificationError(TckToolkitError):
    """Class counts are too small for the requested split or folds."""


class ShapeError(TckToolkitError, ValueError):
    """Array dimensions do not match what a fitted model expects."""


class ConfigError(TckToolkitError, ValueError):
    """A setting is out of range or unknown."""


# ── Kernel ───────────────────────────────────────────────────


class EnsembleSizeError(TckToolkitError):
    """Too few records for the requested number of mixture components."""


class NumericalError(TckToolkitError):
    """A likelihood or objective became non-finite."""


class PartitionFitError(TckToolkitError):
    """Fitting one ensemble member failed; carries its (c, r) identity."""

    def __init__(self, identity: tuple, reason: str):
        self.identity = identity
        super().__init__(f"partition c={identity[0]} r={identity[1]}: {reason}")


# ── Representations and models ───────────────────────────────


class DegenerateInputError(TckToolkitError):
    """Input carries no variance to decompose."""


class DivergenceError(TckToolkitError):
    """Network training produced a non-finite loss."""

    def __init__(self, epoch: int, loss: Optional[float] = None):
        self.epoch = epoch
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")


class DegenerateLabelError(TckToolkitError):
    """Only one class is present where two are required."""


class InfeasibleNuError(TckToolkitError):
    """nu is too large for the class balance of the training labels."""


class AucUndefinedError(TckToolkitError):
    """AUC needs both classes in y_true."""


class EmptySelectionError(TckToolkitError):
    """A cluster selection contains no points."""
