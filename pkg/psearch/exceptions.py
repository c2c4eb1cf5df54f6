from typing import Any, Optional

from .models.results import SolveStatus


class PsearchError(Exception):
    """Base class for solver and instance errors"""

    status: SolveStatus = SolveStatus.ERROR


class InstanceFormatError(PsearchError):
    """Raised when an instance document cannot be parsed or violates an invariant"""

    status = SolveStatus.ERROR

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class UnreachableError(PsearchError):
    status = SolveStatus.UNREACHABLE


class InfeasibleError(PsearchError):
    status = SolveStatus.INFEASIBLE


class NoSolutionError(PsearchError):
    status = SolveStatus.NO_SOLUTION


class StuckError(PsearchError):
    status = SolveStatus.STUCK


class DegenerateError(PsearchError):
    """Conditional tier probability undefined: a tier prefix already sums to 1"""

    status = SolveStatus.DEGENERATE

    def __init__(self, vertex: int, tier: int):
        self.vertex = vertex
        self.tier = tier
        super().__init__(f"vertex {vertex}: probability prefix reaches 1 before tier {tier}")


class LimitExceededError(PsearchError):
    """Search limits exhausted before any incumbent was found"""

    status = SolveStatus.LIMIT_EXCEEDED

    def __init__(self, message: str, incumbent: Any = None):
        self.incumbent = incumbent
        super().__init__(message)


class NotUniformError(PsearchError):
    status = SolveStatus.NOT_UNIFORM


class InsufficientVerticesError(PsearchError):
    status = SolveStatus.INSUFFICIENT_VERTICES


class PrizeBoundError(PsearchError):
    """A positive prize lies below the requested 1/c lower bound"""

    status = SolveStatus.ERROR
