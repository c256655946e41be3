"""Exception types shared across the package.

Rejections produced by validators (bad field data, bad extension data,
inconsistent systems) are ordinary return values, not exceptions; only
genuine misuse or resource exhaustion raises.
"""


class DiffWeilError(Exception):
    """Base class for all errors raised by this package."""


class DivisionByZero(DiffWeilError):
    """Inversion or division by the zero rational function."""


class BadIndex(DiffWeilError):
    """Derivation/variable index out of range, or dimension mismatch."""


class NotApplicable(DiffWeilError):
    """Operation asked of an object it is undefined for (e.g. leader of a constant)."""


class BadBound(DiffWeilError):
    """An order bound too small for the object it should truncate."""


class BudgetExceeded(DiffWeilError):
    """A guarded recursion (Ackermann / bound table / reduction padding) ran out of budget."""


class ParseError(DiffWeilError):
    """Syntax or semantic error in the task-file / expression grammar."""

    def __init__(self, message, line=None, col=None, expected=None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.expected = sorted(expected) if expected else []

    def pretty(self, source_name="<input>"):
        loc = ""
        if self.line is not None:
            loc = f"{self.line}:{self.col}: "
        out = f"{source_name}:{loc}error: {self.message}"
        if self.expected:
            out += " (expected: " + ", ".join(self.expected) + ")"
        return out
