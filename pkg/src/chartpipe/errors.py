"""Exception hierarchy shared across the package.

Every error raised on a contract boundary derives from ChartPipeError so
callers (pipeline pruning, the HTTP service, the CLI) can catch the whole
family without masking programming errors.
"""

from __future__ import annotations


class ChartPipeError(Exception):
    """Base class for all domain errors."""


# --- table ingestion ---------------------------------------------------------


class EmptyInputError(ChartPipeError):
    """CSV source has no header row."""


class RaggedRowError(ChartPipeError):
    """A data row's cell count does not match the header."""


class DuplicateColumnError(ChartPipeError):
    """Two header cells collide after whitespace trimming."""


# --- template / filter parsing ----------------------------------------------


class TemplateSyntaxError(ChartPipeError):
    """Answer or filter text does not match the step grammar."""


class UnknownColumnError(ChartPipeError):
    """A referenced column does not exist in the bound table."""


class UnknownKeywordError(ChartPipeError):
    """Aggregation, mark, axis, or order token outside the valid space."""


class TypeMismatchError(ChartPipeError):
    """Filter predicate incompatible with the column's type."""


# --- completion backend ------------------------------------------------------


class BackendError(ChartPipeError):
    """Base class for completion-backend failures."""


class BackendUnavailableError(BackendError):
    """The backend endpoint could not be reached or refused the request."""


class PromptTooLongError(BackendError):
    """Prompt token estimate exceeds the configured limit."""


class MalformedResponseError(BackendError):
    """The backend reply does not satisfy the wire contract."""


class ScriptMissError(BackendError):
    """Scripted backend has no entry for the requested (step, utterance)."""


# --- pipeline / compiler -----------------------------------------------------


class NoValidChartError(ChartPipeError):
    """Every candidate chain was pruned before a chart could be produced."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"no valid candidates survived step {step}")


class InvalidEditedAnswerError(ChartPipeError):
    """A user-pinned answer failed validation."""


class InvalidCombinationError(ChartPipeError):
    """Mark, encoding, and color cannot be resolved to a supported chart type."""


# --- evaluation --------------------------------------------------------------


class LengthMismatchError(ChartPipeError):
    """Metric input sequences do not both have the expected length."""


class AlignmentError(ChartPipeError):
    """Predictions could not be aligned to dataset triplets by id."""
