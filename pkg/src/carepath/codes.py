"""Parsing and canonical rendering of hospitalization stay codes.

A stay code is six characters laid out as four components: a two-character
category, a one-character care type, a two-character counter and a
one-character severity.  Extracts that drop the severity digit deliver
five-character codes; those are padded with the ``_`` placeholder so every
parsed code has all four components.  The special token ``Death`` marks the
end of a fatal trajectory and never compares equal to a real code.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DataError

DEATH_TOKEN = "Death"
SEVERITY_PLACEHOLDER = "_"

_SLOT_RE = re.compile(r"^[A-Z0-9]+$")


class CodeError(DataError):
    """Raised when a stay code cannot be parsed."""


class InvalidCodeLength(CodeError):
    pass


class InvalidCodeCharset(CodeError):
    pass


@dataclass(frozen=True)
class StayCode:
    """One hospitalization code, or the death marker (all components empty)."""

    category: str
    care_type: str
    counter: str
    severity: str

    @property
    def is_death(self) -> bool:
        return self.category == ""

    def render(self) -> str:
        if self.is_death:
            return DEATH_TOKEN
        return self.category + self.care_type + self.counter + self.severity

    def __str__(self) -> str:
        return self.render()


DEATH = StayCode(category="", care_type="", counter="", severity="")


def parse_code(text: str) -> StayCode:
    """Parse ``text`` into a canonical :class:`StayCode`.

    Accepts the death token (case-insensitive), a six-character code, or a
    five-character code whose missing severity is padded with ``_``.  Input
    is uppercased before validation.
    """
    if text.lower() == DEATH_TOKEN.lower():
        return DEATH
    code = text.upper()
    if len(code) == 5:
        code += SEVERITY_PLACEHOLDER
    if len(code) != 6:
        raise InvalidCodeLength(
            f"code {text!r} has length {len(text)}, expected 5 or 6"
        )
    body, severity = code[:5], code[5]
    if not _SLOT_RE.match(body):
        raise InvalidCodeCharset(f"code {text!r} has characters outside A-Z0-9")
    if severity != SEVERITY_PLACEHOLDER and not _SLOT_RE.match(severity):
        raise InvalidCodeCharset(f"code {text!r} has invalid severity {severity!r}")
    return StayCode(
        category=code[0:2],
        care_type=code[2],
        counter=code[3:5],
        severity=severity,
    )
