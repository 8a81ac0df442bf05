"""Error type shared across the engine.

Every failure carries a stable machine-readable ``code`` (kebab-case) so the
HTTP service and CLI can surface errors without string matching, plus an
optional ``where`` giving the offending location (document path, element
context or line/column).
"""

from __future__ import annotations


class EngineError(Exception):
    """Engine failure with a machine-readable code.

    Attributes:
        code: stable kebab-case identifier, e.g. ``target-not-coarser``.
        message: human-readable description.
        where: offending location (file, element path or ``line:col``), if known.
    """

    def __init__(self, code: str, message: str, where: str | None = None):
        self.code = code
        self.message = message
        self.where = where
        suffix = f" (at {where})" if where else ""
        super().__init__(f"[{code}] {message}{suffix}")

    def to_dict(self) -> dict:
        out = {"code": self.code, "message": self.message}
        if self.where is not None:
            out["where"] = self.where
        return out
