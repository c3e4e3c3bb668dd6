"""Exception types raised by judgecal."""


class JudgeCalError(ValueError):
    """Base class for all judgecal input and domain errors."""


class EmptyTestSetError(JudgeCalError):
    pass


class NonIdentifiableError(JudgeCalError):
    """The judge is no better than label-flipping noise (q0 + q1 <= 1)."""

    def __init__(self, q0: float, q1: float, names: tuple[str, str] = ("q0", "q1")):
        self.q0 = q0
        self.q1 = q1
        super().__init__(
            f"non-identifiable judge: {names[0]} = {q0!r}, {names[1]} = {q1!r}, "
            f"sum {q0 + q1!r} <= 1"
        )


class OutOfRegimeError(JudgeCalError):
    pass


class BudgetError(JudgeCalError):
    pass


class DegenerateProportionError(JudgeCalError):
    pass


class InputFormatError(JudgeCalError):
    """Malformed input record. ``line`` is 1-based and counts the header."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvariantViolation(AssertionError):
    """An internal consistency check failed; indicates a bug, not bad input."""
