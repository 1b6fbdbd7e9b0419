"""Exception types shared across the toolkit.

Every error carries a short machine-parsable ``category`` string that the
CLI prints as ``category: message`` before exiting non-zero.
"""

from __future__ import annotations


class DefectPlsError(Exception):
    """Base class for all toolkit errors."""

    category = "error"


class InvalidInputError(DefectPlsError):
    """Input data violates a precondition (NaN/Inf, negative counts, empty)."""

    category = "invalid-input"


class ConfigurationError(DefectPlsError):
    """Configuration inconsistent with the data (missing column, bad key)."""

    category = "config-error"


class ParseError(DefectPlsError):
    """A CSV or document could not be parsed; message names row and column."""

    category = "parse-error"


class DegenerateDesignError(DefectPlsError):
    """Design matrix has no variance left after centering."""

    category = "degenerate-design"


class DegenerateClassError(DefectPlsError):
    """A split or dataset contains rows of only one class."""

    category = "degenerate-class"


class InvalidSpecError(DefectPlsError):
    """A split/resample/test specification is internally infeasible."""

    category = "invalid-spec"


class DimensionMismatchError(DefectPlsError):
    """Row or column counts of paired inputs disagree."""

    category = "dimension-mismatch"


class RepetitionError(DefectPlsError):
    """A resampling repetition failed; message carries the repetition index."""

    category = "repetition-error"


class DegenerateSampleWarning(UserWarning):
    """Emitted when a benchmark column is all zeros and the threshold
    falls back to 1."""
