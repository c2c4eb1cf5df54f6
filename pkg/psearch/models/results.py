import math
import time
from enum import Enum
from typing import Any, Dict, FrozenSet, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import settings
from .instance import Instance, Walk


class SolveStatus(str, Enum):
    OK = 'OK'
    LIMIT_EXCEEDED = 'LIMIT_EXCEEDED'
    NO_SOLUTION = 'NO_SOLUTION'
    INFEASIBLE = 'INFEASIBLE'
    STUCK = 'STUCK'
    UNREACHABLE = 'UNREACHABLE'
    DEGENERATE = 'DEGENERATE'
    NOT_UNIFORM = 'NOT_UNIFORM'
    INSUFFICIENT_VERTICES = 'INSUFFICIENT_VERTICES'
    ERROR = 'ERROR'


class SearchLimits(BaseModel):
    """Cooperative limits checked at every search expansion"""

    model_config = ConfigDict(frozen=True)

    max_expansions: int = Field(default_factory=lambda: settings.max_expansions, ge=1)
    time_limit_s: Optional[float] = Field(default=None, gt=0)
    prune: bool = True
    max_vertices: Optional[int] = Field(default=None, ge=1)

    def deadline(self) -> float:
        if self.time_limit_s is None:
            return math.inf
        return time.monotonic() + self.time_limit_s


class Solution(BaseModel):
    """A plan with its budget, analytic success probability and solver metadata"""

    model_config = ConfigDict(frozen=True)

    walk: Walk
    budget: float
    probability: float = Field(ge=0, le=1)
    solver: str
    status: SolveStatus = SolveStatus.OK
    optimal: bool = False
    stats: Dict[str, Any] = Field(default_factory=dict)


class KmstSolution(BaseModel):
    """Tree containing the root and spanning at least k other vertices"""

    model_config = ConfigDict(frozen=True)

    root: int
    k: int
    edges: Tuple[Tuple[int, int], ...]
    weight: float
    optimal: bool = False

    @property
    def vertices(self) -> Tuple[int, ...]:
        found = {self.root}
        for u, v in self.edges:
            found.update((u, v))
        return tuple(sorted(found))


class SimReport(BaseModel):
    """Monte-Carlo estimate of a plan's success rate against the analytic value"""

    model_config = ConfigDict(frozen=True)

    trials: int = Field(ge=1)
    successes: int = Field(ge=0)
    empirical_rate: float
    analytic_rate: float
    stderr: float

    @model_validator(mode='after')
    def check_counts(self) -> 'SimReport':
        if self.successes > self.trials:
            raise ValueError("successes cannot exceed trials")
        return self

    @property
    def deviation(self) -> float:
        """Distance between empirical and analytic rates in standard errors"""
        if self.stderr == 0:
            return 0.0 if self.empirical_rate == self.analytic_rate else math.inf
        return abs(self.empirical_rate - self.analytic_rate) / self.stderr

    def csv_header(self) -> str:
        return 'trials,successes,empirical_rate,analytic_rate,stderr'

    def csv_row(self) -> str:
        return f"{self.trials},{self.successes},{self.empirical_rate!r},{self.analytic_rate!r},{self.stderr!r}"


class SearchNode(BaseModel):
    """Partial walk of a branch-and-bound search, summarized by its first arrivals"""

    model_config = ConfigDict(frozen=True)

    vertices: Tuple[int, ...]
    spent: float = Field(ge=0)
    arrivals: Tuple[Tuple[float, int], ...]

    @property
    def current(self) -> int:
        return self.vertices[-1]

    @property
    def visited(self) -> FrozenSet[int]:
        return frozenset(v for _, v in self.arrivals)

    def failure_product(self, instance: Instance, budget: float) -> float:
        """prod over first arrivals of (1 - F_v(budget - arrival_spent))"""
        failure = 1.0
        for spent, v in self.arrivals:
            site = instance.sites[v]
            if site.tiers:
                failure *= 1.0 - site.cumulative(budget - spent)
        return max(failure, 0.0)

    def counted(self, instance: Instance, budget: float) -> FrozenSet[Tuple[int, int]]:
        """(vertex, tier index) events counted under ``budget``"""
        return frozenset(
            (v, i)
            for spent, v in self.arrivals
            for i in range(instance.sites[v].counted(budget - spent))
        )
