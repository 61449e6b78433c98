"""Exception hierarchy shared by every module of the package."""


class NonlocalIVPError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(NonlocalIVPError, ValueError):
    """Invalid problem data: bad grid, misplaced abscissa, malformed config."""

    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class HypothesisViolation(NonlocalIVPError):
    """The nonlocal condition cannot be solved for the initial value.

    Raised when ``<alpha_n, 1> == 1`` for some component, or when a
    theorem constant is requested while its precondition fails.
    """

    def __init__(self, message, component=None):
        self.component = component
        super().__init__(message)


class EvaluationError(NonlocalIVPError, ArithmeticError):
    """Evaluation of a right-hand side or expression produced no finite value.

    Attributes:
        t: time at which the failure occurred, when known.
        component: 1-based component index, when known.
        mask: boolean array flagging offending entries of a vectorized
            evaluation (``None`` for scalar evaluation).
    """

    def __init__(self, message, t=None, component=None, mask=None):
        self.t = t
        self.component = component
        self.mask = mask
        where = []
        if t is not None:
            where.append(f"t={t:.17g}")
        if component is not None:
            where.append(f"component={component}")
        if where:
            message = f"{message} at {', '.join(where)}"
        super().__init__(message)


class NonConvergenceError(NonlocalIVPError):
    """An iterative solver exhausted its budget.

    Attributes:
        history: residual after each iteration.
        last: the last iterate (a Trajectory or an initial vector).
    """

    def __init__(self, message, history=(), last=None):
        self.history = list(history)
        self.last = last
        super().__init__(message)


class BandViolation(NonlocalIVPError):
    """A component reads a state index that the truncation cannot supply."""


class DslSyntaxError(NonlocalIVPError, SyntaxError):
    """Malformed expression source.

    ``position`` is 1-based over the whole source; ``line``/``column`` are
    1-based as well. ``expected`` lists token kinds that would have been
    accepted.
    """

    def __init__(self, message, source="", position=1, expected=()):
        self.source = source
        self.position = position
        self.expected = tuple(expected)
        prefix = source[: max(position - 1, 0)]
        self.line = prefix.count("\n") + 1
        self.column = position - (prefix.rfind("\n") + 1)
        text = f"{message} at line {self.line}, column {self.column} (position {position})"
        if self.expected:
            text += f"; expected {', '.join(self.expected)}"
        super().__init__(text)


class DslNameError(NonlocalIVPError, NameError):
    """Unknown function, or a free name with no binding at evaluation time."""


class IllConditionedWarning(UserWarning):
    """``|1 - <alpha_n, 1>|`` is nonzero but below 1e-8."""
