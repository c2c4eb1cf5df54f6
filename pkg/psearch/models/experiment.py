from typing import Annotated, Any, List, Literal, Optional

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator

from ..config import settings
from .results import SearchLimits


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(',') if item.strip()]
    return value


class AcoParams(BaseModel):
    """Ant colony parameters for the Min-Budget construction"""

    model_config = ConfigDict(frozen=True)

    iterations: int = Field(default=50, ge=1)
    evaporation: float = Field(default=0.05, ge=0, lt=1)
    initial_pheromone: float = Field(default=1.0, gt=0)
    seed: int = 0
    reward: Literal['cardinality', 'prize'] = 'cardinality'
    score_mode: Literal['product', 'additive'] = 'product'


class GeneratorConfig(BaseModel):
    """Instance generator parameters; defaults follow the published small-world setup"""

    model_config = ConfigDict(frozen=True)

    topology: Literal['small_world', 'file'] = 'small_world'
    n: int = Field(default=25_000, ge=2)
    neighbors: int = Field(default=6, ge=2)
    rewire_prob: float = Field(default=0.09, ge=0, le=1)
    edge_cost_min: float = Field(default=40.0, gt=0)
    edge_cost_max: float = Field(default=1040.0, gt=0)

    # topology == 'file'
    graph_path: Optional[str] = None
    sample_size: Optional[int] = Field(default=None, ge=2)

    cost_mean: float = Field(default=2700.0, gt=0)
    cost_std: float = Field(default=900.0, ge=0)
    cost_bound_std: float = Field(default=2.0, gt=0)
    tier_count_min: int = Field(default=1, ge=0)
    tier_count_max: int = Field(default=5, ge=0)
    prob_mean: float = Field(default=0.24, gt=0, lt=1)
    prob_std: Optional[float] = Field(default=None, ge=0)

    seed: int = 0

    @model_validator(mode='after')
    def check_ranges(self) -> 'GeneratorConfig':
        if self.topology == 'small_world':
            if self.neighbors % 2:
                raise ValueError("neighbors must be even")
            if self.n < self.neighbors + 1:
                raise ValueError("n must be at least neighbors + 1")
        elif self.graph_path is None:
            raise ValueError("topology 'file' needs graph_path")
        if self.edge_cost_min > self.edge_cost_max:
            raise ValueError("edge_cost_min exceeds edge_cost_max")
        if self.tier_count_min > self.tier_count_max:
            raise ValueError("tier_count_min exceeds tier_count_max")
        if self.tier_count_max > settings.max_tiers:
            raise ValueError(f"tier_count_max exceeds the maximum of {settings.max_tiers}")
        return self

    @property
    def effective_prob_std(self) -> float:
        """Probability spread; a third of the expectation unless set"""
        return self.prob_std if self.prob_std is not None else self.prob_mean / 3.0


class ExperimentConfig(BaseModel):
    """A paired sweep: every sweep point runs every solver on the same instance seeds"""

    model_config = ConfigDict(frozen=True)

    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)
    mode: Literal['min_budget', 'max_probability'] = 'min_budget'
    solvers: Annotated[List[str], BeforeValidator(_split_list)] = Field(default_factory=lambda: ['greedy', 'aco', 'bl', 'nb', 'optimal'])
    sweep_parameter: Literal['p_succ', 'prob_mean', 'budget'] = 'p_succ'
    sweep_values: Annotated[List[float], BeforeValidator(_split_list)] = Field(default_factory=lambda: [0.7, 0.8, 0.9, 0.975])
    p_succ: float = Field(default=0.9, gt=0, le=1)
    budget: Optional[float] = Field(default=None, ge=0)
    instances_per_point: int = Field(default=40, ge=1)
    base_seed: int = 0
    time_limit_s: float = Field(default_factory=lambda: settings.time_limit_s, gt=0)
    max_expansions: int = Field(default_factory=lambda: settings.max_expansions, ge=1)
    aco: AcoParams = Field(default_factory=AcoParams)
    kmst_mode: Literal['exact', 'heuristic'] = 'exact'
    rounding: bool = True
    threads: int = Field(default_factory=lambda: settings.threads, ge=1)
    include_timing: bool = True
    output_path: Optional[str] = None

    @model_validator(mode='after')
    def check_sweep(self) -> 'ExperimentConfig':
        if not self.sweep_values:
            raise ValueError("sweep_values must not be empty")
        if not self.solvers:
            raise ValueError("solvers must not be empty")
        if self.mode == 'min_budget' and self.sweep_parameter == 'budget':
            raise ValueError("a budget sweep needs mode=max_probability")
        if self.mode == 'max_probability' and self.sweep_parameter == 'p_succ':
            raise ValueError("mode=max_probability sweeps budget or prob_mean, not p_succ")
        if self.mode == 'max_probability' and self.sweep_parameter != 'budget' and self.budget is None:
            raise ValueError("mode=max_probability needs a budget or a budget sweep")
        if self.sweep_parameter == 'p_succ' and any(not 0 < v <= 1 for v in self.sweep_values):
            raise ValueError("p_succ sweep values must lie in (0, 1]")
        if self.sweep_parameter == 'prob_mean' and any(not 0 < v < 1 for v in self.sweep_values):
            raise ValueError("prob_mean sweep values must lie in (0, 1)")
        return self


class SolverOptions(BaseModel):
    """Knobs shared by every registered solver; each solver reads the ones it uses"""

    model_config = ConfigDict(frozen=True)

    limits: SearchLimits = Field(default_factory=SearchLimits)
    aco: AcoParams = Field(default_factory=AcoParams)
    score_mode: Literal['product', 'additive'] = 'product'
    unvisited_only: bool = True
    kmst_mode: Literal['exact', 'heuristic'] = 'exact'
    rounding: bool = True
    truncate: bool = False
