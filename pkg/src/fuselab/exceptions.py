"""Shared exception types.

The CLI maps these onto its exit-code contract: configuration, schema,
parse, and input errors exit 2; numerical divergence exits 3.
"""


class FuselabError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(FuselabError):
    """Operand shapes do not conform; message names both shapes."""


class DomainError(FuselabError):
    """Value outside an operation's mathematical domain (log of a negative,
    division by zero, non-finite result)."""


class ContractError(FuselabError):
    """An API precondition was violated (e.g. backward on a non-scalar)."""


class EvaluationError(FuselabError):
    """A checked function produced a non-finite value."""

    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate


class DivergenceError(FuselabError):
    """Training produced a non-finite loss; carries the step index."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConfigError(FuselabError):
    """Invalid configuration value or file."""


class ParseError(FuselabError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class SchemaError(FuselabError):
    """Record violates the data schema (unknown label, missing modality)."""


class FormatError(FuselabError):
    """Model file is corrupt, truncated, or has an unsupported version."""


class InputError(FuselabError):
    """Caller-supplied runtime input is unusable (wrong length, missing
    modality)."""
