"""Exception hierarchy shared by every stagelayout module.

The CLI maps these onto stable exit codes (see ``EXIT_CODES``).
"""

from __future__ import annotations


class StageLayoutError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class FormatSyntaxError(StageLayoutError, ValueError):
    """Malformed text: not decodable or not well-formed JSON."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class SchemaError(StageLayoutError, ValueError):
    """Well-formed document that violates a structural rule."""


class ConfigError(StageLayoutError, ValueError):
    pass


class PlacementError(StageLayoutError):
    """An entity could not be placed; ``entity_id`` names it when known."""

    exit_code = 2

    def __init__(self, message: str, entity_id: str | None = None):
        self.entity_id = entity_id
        if entity_id is not None and entity_id not in message:
            message = f"{entity_id}: {message}"
        super().__init__(message)


class NoSpaceError(PlacementError):
    pass


class FitError(PlacementError):
    pass


class BoundsError(PlacementError, IndexError):
    """A rectangle or height falls outside the grid / surface it addresses."""


class DegenerateError(PlacementError):
    """Sightline projection is undefined (entity not between viewer and wall)."""


class ProviderError(StageLayoutError):
    exit_code = 2


class EmptyError(StageLayoutError, ValueError):
    pass


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, StageLayoutError):
        return exc.exit_code
    if isinstance(exc, OSError):
        return 3
    return 1
