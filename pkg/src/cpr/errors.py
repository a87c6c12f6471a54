"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI: validation errors -> 1,
transport errors -> 2, numerical errors -> 3.
"""


class CprError(Exception):
    """Base class for all toolkit errors."""


class InvalidConfigError(CprError):
    """A configuration value violates its documented range or shape."""


class CorpusError(CprError):
    """A corpus file failed to parse or validate."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PerturbationError(CprError):
    """An augmentation operator failed while generating a sample."""

    def __init__(self, message, sample_index=None):
        if sample_index is not None:
            message = f"sample {sample_index}: {message}"
        super().__init__(message)
        self.sample_index = sample_index


class QueryError(CprError):
    """A model query failed at the transport level."""


class QueryTimeout(QueryError):
    """A model query exceeded its timeout."""


class AlignmentError(CprError):
    """Positionally paired inputs have mismatched lengths."""


class NumericalError(CprError):
    """A numerical routine produced a non-finite intermediate value."""


class InvalidKError(CprError):
    """A cluster count is out of range for the given data."""
