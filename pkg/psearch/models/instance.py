import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config import settings


class Tier(BaseModel):
    """One (cost, probability) pair of a site's cost distribution"""

    model_config = ConfigDict(frozen=True)

    cost: float = Field(ge=0)
    prob: float = Field(ge=0, le=1)


class Site(BaseModel):
    """Cost probability mass function offered at one vertex"""

    model_config = ConfigDict(frozen=True)

    id: int = Field(ge=0)
    tiers: Tuple[Tier, ...] = ()

    @field_validator('tiers', mode='after')
    @classmethod
    def merge_duplicate_costs(cls, tiers: Tuple[Tier, ...]) -> Tuple[Tier, ...]:
        merged: Dict[float, float] = {}
        for tier in tiers:
            merged[tier.cost] = merged.get(tier.cost, 0.0) + tier.prob
        if math.fsum(merged.values()) > 1.0 + settings.tolerance:
            raise ValueError(f"probability mass exceeds 1 ({math.fsum(merged.values()):.6f})")
        return tuple(Tier(cost=cost, prob=min(prob, 1.0)) for cost, prob in sorted(merged.items()))

    @model_validator(mode='after')
    def check_mass(self) -> 'Site':
        if self.total_prob > 1.0 + settings.tolerance:
            raise ValueError(f"vertex {self.id}: probability mass exceeds 1 ({self.total_prob:.6f})")
        if len(self.tiers) > settings.max_tiers:
            raise ValueError(f"vertex {self.id}: {len(self.tiers)} tiers exceeds the maximum of {settings.max_tiers}")
        return self

    @property
    def total_prob(self) -> float:
        return math.fsum(t.prob for t in self.tiers)

    @property
    def min_cost(self) -> float:
        return self.tiers[0].cost if self.tiers else math.inf

    def counted(self, remaining: float) -> int:
        """Number of tiers affordable with the given remaining budget"""
        tol = settings.tolerance
        return sum(1 for t in self.tiers if t.cost <= remaining + tol)

    def cumulative(self, remaining: float) -> float:
        """F_v(b): probability of obtaining the item with remaining budget b"""
        tol = settings.tolerance
        return min(1.0, math.fsum(t.prob for t in self.tiers if t.cost <= remaining + tol))


class Instance(BaseModel):
    """Weighted undirected graph, per-vertex sites and the start vertex.

    Vertices are dense indices 0..n-1; ``labels`` maps them back to the ids of
    the source documents. The graph is frozen after construction.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    graph: nx.Graph
    sites: Tuple[Site, ...]
    start: int = 0
    labels: Tuple[int, ...]
    allow_zero_weights: bool = False

    @model_validator(mode='after')
    def check_invariants(self) -> 'Instance':
        n = self.graph.number_of_nodes()
        if set(self.graph.nodes) != set(range(n)):
            raise ValueError("graph vertices must be dense indices 0..n-1")
        if len(self.sites) != n or len(self.labels) != n:
            raise ValueError("sites and labels must cover every vertex")
        if any(site.id != v for v, site in enumerate(self.sites)):
            raise ValueError("site ids must match vertex indices")
        if not 0 <= self.start < n:
            raise ValueError(f"start vertex {self.start} is not in the graph")
        if self.sites[self.start].tiers:
            raise ValueError("start vertex must have an empty cost table")
        for u, v, w in self.graph.edges(data='weight'):
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if w is None or w < 0 or (w == 0 and not self.allow_zero_weights):
                raise ValueError(f"edge ({u}, {v}) has nonpositive weight {w}")
        return self

    @classmethod
    def build(
        cls,
        n: int,
        edges: Iterable[Tuple[int, int, float]],
        tiers: Optional[Dict[int, Sequence[Tuple[float, float]]]] = None,
        start: int = 0,
        labels: Optional[Sequence[int]] = None,
        allow_zero_weights: bool = False,
    ) -> 'Instance':
        """Build an instance over vertices 0..n-1, collapsing parallel edges to their minimum weight"""
        graph = nx.Graph()
        graph.add_nodes_from(range(n))
        for u, v, w in edges:
            if graph.has_edge(u, v):
                w = min(w, graph[u][v]['weight'])
            graph.add_edge(u, v, weight=float(w))
        tiers = tiers or {}
        sites = tuple(
            Site(id=v, tiers=tuple(Tier(cost=c, prob=p) for c, p in tiers.get(v, ())))
            for v in range(n)
        )
        return cls(
            graph=nx.freeze(graph),
            sites=sites,
            start=start,
            labels=tuple(labels) if labels is not None else tuple(range(n)),
            allow_zero_weights=allow_zero_weights,
        )

    def with_sites(self, sites: Sequence[Site]) -> 'Instance':
        return Instance(graph=self.graph, sites=tuple(sites), start=self.start, labels=self.labels,
                        allow_zero_weights=self.allow_zero_weights)

    @property
    def n(self) -> int:
        return self.graph.number_of_nodes()

    def weight(self, u: int, v: int) -> float:
        return self.graph[u][v]['weight']

    def tier_bearing(self) -> List[int]:
        return [v for v, site in enumerate(self.sites) if site.tiers]

    def total_available_probability(self) -> float:
        """Success probability if every site in the start component were bought at any price"""
        component = nx.node_connected_component(self.graph, self.start)
        failure = math.prod(1.0 - self.sites[v].total_prob for v in component)
        return 1.0 - failure


class Walk(BaseModel):
    """Ordered vertex walk from the start vertex with prefix travel costs"""

    model_config = ConfigDict(frozen=True)

    vertices: Tuple[int, ...]
    prefix_cost: Tuple[float, ...]

    @model_validator(mode='after')
    def check_prefix(self) -> 'Walk':
        if not self.vertices or len(self.vertices) != len(self.prefix_cost):
            raise ValueError("walk needs at least the start vertex and one prefix cost per vertex")
        if self.prefix_cost[0] != 0:
            raise ValueError("prefix_cost[0] must be 0")
        if any(b < a for a, b in zip(self.prefix_cost, self.prefix_cost[1:])):
            raise ValueError("prefix costs must be nondecreasing")
        return self

    @classmethod
    def of(cls, instance: Instance, vertices: Sequence[int]) -> 'Walk':
        vertices = tuple(vertices) or (instance.start,)
        if vertices[0] != instance.start:
            raise ValueError(f"walk must begin at the start vertex {instance.start}")
        prefix = [0.0]
        for u, v in zip(vertices, vertices[1:]):
            if not instance.graph.has_edge(u, v):
                raise ValueError(f"walk uses missing edge ({u}, {v})")
            prefix.append(prefix[-1] + instance.weight(u, v))
        return cls(vertices=vertices, prefix_cost=tuple(prefix))

    @classmethod
    def empty(cls, instance: Instance) -> 'Walk':
        return cls(vertices=(instance.start,), prefix_cost=(0.0,))

    @property
    def travel_cost(self) -> float:
        return self.prefix_cost[-1]

    @property
    def edges(self) -> List[Tuple[int, int]]:
        return list(zip(self.vertices, self.vertices[1:]))

    def first_arrivals(self) -> List[Tuple[int, int]]:
        """(position, vertex) of every first arrival, in walk order"""
        seen = set()
        arrivals = []
        for j, v in enumerate(self.vertices):
            if v not in seen:
                seen.add(v)
                arrivals.append((j, v))
        return arrivals

    def labelled(self, instance: Instance) -> List[int]:
        return [instance.labels[v] for v in self.vertices]

    def __len__(self) -> int:
        return len(self.vertices)


class CollectionEvent(BaseModel):
    """Tiers counted at one first arrival"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vertex: int
    arrival_spent: float
    tiers_counted: range
