"""Exception hierarchy shared by the toolkit."""


class HardyCertError(Exception):
    """Base class for all toolkit errors."""


class ParseError(HardyCertError):
    """Malformed weight expression.

    ``offset`` is a character offset into the original source text.
    """

    def __init__(self, offset, expected, source):
        self.offset = offset
        self.expected = expected
        self.source = source
        line_start = source.rfind("\n", 0, offset) + 1
        line_end = source.find("\n", offset)
        if line_end < 0:
            line_end = len(source)
        self.excerpt = source[line_start:line_end]
        col = offset - line_start
        super().__init__(
            f"{expected} expected at offset {offset}\n"
            f"  {self.excerpt}\n  {' ' * col}^"
        )


class DomainError(HardyCertError, ArithmeticError):
    """An expression was evaluated outside its domain."""

    def __init__(self, x, subexpr, reason):
        self.x = x
        self.subexpr = subexpr
        self.reason = reason
        super().__init__(f"{reason} in '{subexpr}' at x={x!r}")


class ConditionViolation(HardyCertError):
    """A hypothesis of a criterion failed (e.g. local integrability, doubling).

    ``condition`` is a short label such as ``"c21"``; ``verdict`` carries the
    numerical evidence when there is one.
    """

    def __init__(self, condition, message, verdict=None):
        self.condition = condition
        self.verdict = verdict
        super().__init__(f"condition {condition} violated: {message}")


class NegativeWeight(HardyCertError):
    def __init__(self, name, x, value):
        self.name = name
        self.x = x
        self.value = value
        super().__init__(f"weight {name} is negative at x={x!r} (value {value!r})")


class NoConvergence(HardyCertError):
    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class InvalidWeight(HardyCertError):
    pass


class SandwichViolation(HardyCertError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)
