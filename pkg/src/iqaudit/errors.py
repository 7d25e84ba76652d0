"""Exception types shared across the toolkit.

Every error raised on purpose derives from AuditError so callers can catch
one base type; the CLI maps subtrees onto exit codes (see cli.EXIT_*).
"""
from __future__ import annotations

__all__ = [
    "AuditError",
    "InputError",
    "IoFormatError",
    "BadMagic",
    "UnsupportedDtype",
    "UnsupportedOrder",
    "TruncatedPayload",
    "NonFiniteValue",
    "DuplicateKey",
    "SeverityMismatch",
    "MalformedLine",
    "MalformedRow",
    "AlignmentError",
    "BadFormat",
    "UnsupportedMaxval",
    "TruncatedPixels",
    "UnknownKind",
    "NonCleanInput",
    "MissingImage",
    "IoError",
    "ZeroNormRow",
    "DimensionMismatch",
    "NotNormalized",
    "DegenerateInput",
    "EmptyInput",
    "EmptyJoin",
    "TooFewGroups",
    "SingleClass",
    "NoConvergence",
    "AllLabelsSkipped",
    "AllIdsSkipped",
    "UnknownNode",
    "CycleError",
    "MechanismMismatch",
    "NoValidStrata",
    "ConfigError",
]


class AuditError(Exception):
    """Base class for all toolkit errors."""


class InputError(AuditError):
    """Caller handed us arguments or data shapes we cannot work with."""


class IoFormatError(AuditError):
    """A file or byte stream does not follow its declared format."""


# --- tensor and table I/O -------------------------------------------------

class BadMagic(IoFormatError):
    """Stream does not start with the expected magic/version prefix."""


class UnsupportedDtype(IoFormatError):
    """Tensor header declares a dtype other than little-endian float32."""


class UnsupportedOrder(IoFormatError):
    """Tensor header declares Fortran (column-major) layout."""


class TruncatedPayload(IoFormatError):
    """Payload is shorter than the header-declared element count."""


class NonFiniteValue(IoFormatError):
    """NaN or infinity found where only finite values are allowed."""


class DuplicateKey(IoFormatError):
    """A record key that must be unique appears more than once."""


class SeverityMismatch(IoFormatError):
    """severity == 0 and corruption == "clean" must imply each other."""


class MalformedLine(IoFormatError):
    """A JSONL line failed to parse or is missing required fields."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


class MalformedRow(IoFormatError):
    """A CSV row failed to parse or is missing required columns."""

    def __init__(self, row_no: int, reason: str):
        super().__init__(f"row {row_no}: {reason}")
        self.row_no = row_no


class AlignmentError(InputError):
    """Tensor row count does not match the manifest it is paired with."""


# --- images ---------------------------------------------------------------

class BadFormat(IoFormatError):
    """Not a binary PGM/PPM stream with a well-formed header."""


class UnsupportedMaxval(IoFormatError):
    """PNM maxval other than 255."""


class TruncatedPixels(IoFormatError):
    """Pixel payload shorter than width * height * channels."""


# --- corruptions ----------------------------------------------------------

class UnknownKind(InputError):
    """Corruption kind not in the registry."""


class NonCleanInput(InputError):
    """Mixture construction requires an all-clean input manifest."""


class MissingImage(IoFormatError):
    """Manifest references an image file that does not exist."""

    def __init__(self, path: str):
        super().__init__(f"missing image: {path}")
        self.path = path


class IoError(IoFormatError):
    """Underlying read or write failed."""


# --- quality scores -------------------------------------------------------

class ZeroNormRow(InputError):
    """Row with (near-)zero L2 norm cannot be normalized."""


class DimensionMismatch(InputError):
    """Operand dimensions are incompatible."""


class NotNormalized(InputError):
    """Rows expected to be unit-norm are not."""


# --- statistics -----------------------------------------------------------

class DegenerateInput(InputError):
    """Too short, zero variance, or otherwise undefined statistic."""


class EmptyInput(InputError):
    """Empty sequence where at least one element is required."""


class EmptyJoin(InputError):
    """Score/correctness join produced no rows."""


class TooFewGroups(InputError):
    """Fewer groups than the statistic needs."""


# --- predictability -------------------------------------------------------

class SingleClass(InputError):
    """Binary outcome vector contains only one class."""


class NoConvergence(AuditError):
    """Iterative fit did not converge within the iteration budget."""

    def __init__(self, iterations: int):
        super().__init__(f"no convergence after {iterations} iterations")
        self.iterations = iterations


class AllLabelsSkipped(InputError):
    """Every label group was skipped (single-class or too small)."""


class AllIdsSkipped(InputError):
    """Every image id was skipped (too few variants or single-class)."""


# --- causal ---------------------------------------------------------------

class UnknownNode(InputError):
    """Query references a node not present in the graph."""


class CycleError(InputError):
    """Edge set is not acyclic."""


class MechanismMismatch(InputError):
    """SCM mechanisms do not line up with the graph's node/parent sets."""


class NoValidStrata(InputError):
    """No stratum contains both treatment levels."""


# --- CLI / config ---------------------------------------------------------

class ConfigError(InputError):
    """Bad flag value, missing required option, or unusable config file."""
