import logging
from typing import AbstractSet, Dict, FrozenSet, Iterable, List, Optional, Tuple

import networkx as nx

from ..exceptions import UnreachableError
from ..models import Instance, Walk

logger = logging.getLogger(__name__)


def restricted_shortest_path(
    instance: Instance,
    source: int,
    target: int,
    allowed: Optional[Iterable[int]] = None,
) -> Tuple[float, List[int]]:
    """Shortest path from source to target whose interior vertices lie in ``allowed``.

    ``allowed=None`` means every vertex. The target is always admissible.
    Raises UnreachableError when no admissible path exists.
    """
    graph = instance.graph
    if source not in graph or target not in graph:
        raise UnreachableError(f"vertex {source if source not in graph else target} is not in the graph")
    if source == target:
        return 0.0, [source]
    if allowed is not None:
        graph = graph.subgraph(set(allowed) | {source, target})
    try:
        distance, path = nx.single_source_dijkstra(graph, source, target, weight='weight')
    except nx.NetworkXNoPath:
        raise UnreachableError(f"no admissible path from {source} to {target}") from None
    return distance, path


def restricted_paths(
    graph: nx.Graph,
    source: int,
    interior: AbstractSet[int],
) -> Dict[int, Tuple[float, List[int]]]:
    """Shortest paths from source to every vertex reachable with all interior vertices in ``interior``.

    One Dijkstra over the subgraph induced by ``interior | {source}``, then one
    relaxation hop out of it, so endpoints outside ``interior`` are reached but
    never passed through.
    """
    inner = graph.subgraph(set(interior) | {source})
    distances, paths = nx.single_source_dijkstra(inner, source, weight='weight')
    result: Dict[int, Tuple[float, List[int]]] = {v: (d, paths[v]) for v, d in distances.items()}
    for u, du in sorted(distances.items(), key=lambda item: (item[1], item[0])):
        for v, data in graph[u].items():
            if v in inner:
                continue
            dv = du + data['weight']
            if v not in result or dv < result[v][0]:
                result[v] = (dv, paths[u] + [v])
    return result


def frontier(instance: Instance, walk: Walk) -> FrozenSet[int]:
    """N_P: every neighbor of a walk vertex, walk vertices included when adjacent to one"""
    graph = instance.graph
    neighbors = set()
    for v in set(walk.vertices):
        neighbors.update(graph[v])
    return frozenset(neighbors)


def shortest_distances(graph: nx.Graph) -> Dict[int, Dict[int, float]]:
    """All-pairs shortest path lengths, used by search bounds"""
    return {source: lengths for source, lengths in nx.all_pairs_dijkstra_path_length(graph, weight='weight')}
