"""Shared error type: every engine failure carries a stable machine-readable code."""

from __future__ import annotations

from typing import Any


class EngineError(Exception):
    """Raised by any engine operation that cannot complete.

    ``code`` is a stable machine-readable name (e.g. ``unknown_node``,
    ``revision_conflict``); the HTTP layer maps codes to status codes and the
    error body shape ``{code, message, details?}``.
    """

    def __init__(self, code: str, message: str = "", **details: Any) -> None:
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message
        self.details = details

    def to_dict(self) -> dict[str, Any]:
        body: dict[str, Any] = {"code": self.code, "message": self.message}
        if self.details:
            body["details"] = self.details
        return body
