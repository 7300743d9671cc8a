"""Error hierarchy shared by every stage."""

from typing import Any

from .constants import EXIT_PROCESSING_FAILURE, EXIT_VALIDATION_FAILURE


class MenderError(Exception):
    """Processing error with a machine-readable code."""

    exit_code = EXIT_PROCESSING_FAILURE

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_payload(self) -> dict[str, Any]:
        """Single-line JSON payload printed on the diagnostic stream."""
        payload: dict[str, Any] = {"error": self.code, "message": self.message}
        payload.update(self.details)
        return payload


class InputError(MenderError):
    """Input or validation error."""

    exit_code = EXIT_VALIDATION_FAILURE


class MissingFile(InputError):
    """A required input path does not exist."""

    def __init__(self, path: str) -> None:
        super().__init__(f"No such file: {path}", path=path)


class SchemaError(InputError):
    """A document does not match its schema."""

    def __init__(self, path: str, reason: str = "") -> None:
        message = f"Schema error at {path}" + (f": {reason}" if reason else "")
        super().__init__(message, path=path)


class InvariantViolation(InputError):
    """A document parsed but breaks a domain invariant."""

    def __init__(self, description: str) -> None:
        super().__init__(description)
