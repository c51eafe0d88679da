"""Exception hierarchy shared by all webrank modules."""


class WebrankError(Exception):
    """Base class for every error raised by this package."""


class ExprSyntaxError(WebrankError):
    """Malformed expression text; carries the 0-based offset of the problem."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownIdentifierError(ExprSyntaxError):
    """An identifier that is neither an allowed variable nor a function."""

    def __init__(self, name: str, position: int):
        super().__init__(f"unknown identifier {name!r}", position)
        self.name = name


class DomainEvalError(WebrankError):
    """Evaluation left the domain of definition (log, division, sqrt, pow)."""

    def __init__(self, message: str, subterm: str, point):
        super().__init__(f"{message} in {subterm} at {point}")
        self.subterm = subterm
        self.point = point


class ExpressionTooLargeError(WebrankError):
    """An expression exceeded the configured node cap."""


class InsufficientDomainError(WebrankError):
    """Too few sample points inside the expression's domain of definition."""


class DegeneratePairError(WebrankError):
    """Two web functions have an identically vanishing Jacobian."""

    def __init__(self, i: int, j: int):
        super().__init__(f"web functions {i} and {j} define the same foliation "
                         f"(their Jacobian vanishes identically on the box)")
        self.pair = (i, j)


class ChartDegeneracyError(WebrankError):
    """The chart built from the first two web functions degenerates."""


class GaugeError(WebrankError):
    """A partial derivative of the web-equation function vanishes on the box."""


class InvariantDegeneracyError(WebrankError):
    """A basic invariant is identically 0 or 1 on the sample box."""


class PreconditionError(WebrankError):
    """An operation was called outside its stated preconditions."""


class ReductionIncompleteError(WebrankError):
    """Obstruction reduction left a jet coordinate outside the target basis."""


class LeadingCoefficientError(WebrankError):
    """A division step hit an identically vanishing leading coefficient."""


class InapplicableRuleError(WebrankError):
    """An elimination rule was applied to an equation of the wrong shape."""


class IndeterminateError(WebrankError):
    """Sampled verdicts disagree across seeds; the result is not reported."""


class SpecFileError(WebrankError):
    """A web specification file failed to parse or validate."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
