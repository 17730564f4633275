class ErlError(Exception):
    """Base class for package errors."""


class DomainError(ErlError, ValueError):
    """An argument is outside the domain of an operation."""


class ConfigError(ErlError, ValueError):
    pass


class DataError(ErlError, ValueError):
    """Malformed or inconsistent input data.

    ``line`` is the 1-based line number in the offending file, when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class LeakageError(ErlError):
    """Evaluation-cohort labels reached a training routine."""


class LineageError(ErlError):
    """A model's training lineage forbids scoring it on the given cohort."""


class TrainingError(ErlError, FloatingPointError):
    """Optimisation diverged (non-finite loss or parameters)."""
