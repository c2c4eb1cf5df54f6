from typing import Dict, FrozenSet, Optional, Tuple

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .instance import Instance


class SingleCostInstance(BaseModel):
    """Instance whose sites carry at most one tier, plus the map back to the multi-cost original.

    ``back_map[u] = (v, i)`` says split vertex u stands for tier i of original
    vertex v; tierless originals map to ``(v, None)``.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    instance: Instance
    original: Instance
    back_map: Tuple[Tuple[int, Optional[int]], ...]
    chains: Dict[int, Tuple[int, ...]]

    @model_validator(mode='after')
    def check_single_cost(self) -> 'SingleCostInstance':
        if any(len(site.tiers) > 1 for site in self.instance.sites):
            raise ValueError("split instance may carry at most one tier per vertex")
        if len(self.back_map) != self.instance.n:
            raise ValueError("back_map must cover every split vertex")
        return self


class DtspInstance(BaseModel):
    """Deadline-TSP instance: collect prize(v) by reaching v from the root no later than deadline(v)"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    graph: nx.Graph
    root: int
    prize: Tuple[float, ...]
    deadline: Tuple[float, ...]
    lower_bound_constant: Optional[float] = None

    @model_validator(mode='after')
    def check_prizes(self) -> 'DtspInstance':
        n = self.graph.number_of_nodes()
        if len(self.prize) != n or len(self.deadline) != n:
            raise ValueError("prize and deadline must cover every vertex")
        if any(p < 0 for p in self.prize):
            raise ValueError("prizes must be nonnegative")
        return self

    def length(self, u: int, v: int) -> float:
        return self.graph[u][v]['weight']


class DtspSolution(BaseModel):
    model_config = ConfigDict(frozen=True)

    walk: Tuple[int, ...]
    total_prize: float = Field(ge=0)
    collected: FrozenSet[int]
    optimal: bool = True
    expansions: int = 0
