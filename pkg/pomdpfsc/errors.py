"""Exception hierarchy shared by all pomdpfsc modules.

Reporting helpers (``validate`` and the document validators) return lists of
messages; everything else raises one of the classes below.
"""

from __future__ import annotations

from typing import Optional, Sequence


class PomdpFscError(Exception):
    """Base class of every error raised by pomdpfsc."""


class ConfigurationError(PomdpFscError, ValueError):
    """Invalid arguments, configuration values, or incompatible specifications."""


class ModelError(PomdpFscError, ValueError):
    """A model document or model object is unusable."""


class ModelParseError(ModelError):
    """Malformed JSON; carries the 1-based line and column of the failure."""

    def __init__(self, message: str, *, line: int, column: int, offset: int = 0) -> None:
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column
        self.offset = offset


class SchemaError(ModelError):
    """The document parsed but violates the schema; ``problems`` name the fields."""

    def __init__(self, problems: Sequence[str]) -> None:
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ModelValidationError(ModelError):
    """The model was built but breaks a model invariant."""

    def __init__(self, violations: Sequence[str]) -> None:
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ControllerError(PomdpFscError, ValueError):
    """An FSC cannot be composed with a POMDP."""

    def __init__(self, message: str, *, state: Optional[int] = None, node: Optional[int] = None) -> None:
        super().__init__(message)
        self.state = state
        self.node = node


class BeliefError(PomdpFscError, ValueError):
    """A belief operation is undefined (disabled action, zero observation probability)."""


class CannotSplitError(PomdpFscError):
    """Every hole of the family is a singleton: the family is a single controller."""
