"""Exception hierarchy shared by every module."""


class PWExpandError(Exception):
    """Base class for all errors raised by the package."""


class ParseError(PWExpandError):
    def __init__(self, message, line=1, column=1, source=None):
        self.line = line
        self.column = column
        self.source = source
        where = f"line {line}, column {column}"
        if source:
            where = f"{source}: {where}"
        super().__init__(f"{where}: {message}")


class SemanticError(PWExpandError):
    """A well-formed definition that describes an invalid map or family."""


class InvalidMap(SemanticError):
    pass


class BreakpointHit(PWExpandError):
    def __init__(self, x, index):
        self.x = x
        self.index = index
        super().__init__(f"x={x!r} lies on breakpoint b_{index}")


class OrbitTruncated(PWExpandError):
    """The orbit reached a breakpoint at ``step``; ``orbit`` holds x_0..x_step."""

    def __init__(self, step, orbit=None):
        self.step = step
        self.orbit = list(orbit) if orbit is not None else []
        super().__init__(f"orbit hits a breakpoint at step {step}")


class CellCountExceeded(PWExpandError):
    pass


class RootSolveFailure(PWExpandError):
    pass


class NonSmoothPoint(PWExpandError):
    pass


class NotCoveringWithin(PWExpandError):
    def __init__(self, n_max, residual_length=None):
        self.n_max = n_max
        self.residual_length = residual_length
        super().__init__(
            f"complement not reduced to a finite set within N={n_max} "
            f"(residual length {residual_length!r})"
        )


class ScaleTooLarge(PWExpandError):
    pass


class Infeasible(PWExpandError):
    """The hypothesis delta > 1/(lambda - 1) cannot be met."""


class NonConvergence(PWExpandError):
    pass


class MissingCounterpart(PWExpandError):
    def __init__(self, word):
        self.word = tuple(word)
        super().__init__(f"word {' '.join(map(str, word))} has no counterpart")


class RootClusterWarning(UserWarning):
    pass
