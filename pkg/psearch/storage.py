import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml
from dotenv import dotenv_values
from pydantic import ValidationError

from .config import settings
from .exceptions import InstanceFormatError
from .models import AcoParams, DtspInstance, ExperimentConfig, GeneratorConfig, Instance

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _strip(line: str) -> str:
    return line.split('#', 1)[0].strip()


def _parse_id(token: str, lineno: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise InstanceFormatError(f"vertex id '{token}' is not an integer", lineno) from None
    if value < 0:
        raise InstanceFormatError(f"vertex id {value} is negative", lineno)
    return value


def _parse_float(token: str, what: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise InstanceFormatError(f"{what} '{token}' is not a number", lineno) from None
    if not math.isfinite(value):
        raise InstanceFormatError(f"{what} '{token}' is not finite", lineno)
    return value


def parse_graph(graph_text: str) -> Tuple[List[int], List[Tuple[int, int, float]]]:
    """Parse an edge list: one "u v w" per line, or a single id declaring an isolated vertex"""
    vertex_ids = set()
    edges = []
    for lineno, raw in enumerate(graph_text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        tokens = line.split()
        if len(tokens) == 1:
            vertex_ids.add(_parse_id(tokens[0], lineno))
            continue
        if len(tokens) != 3:
            raise InstanceFormatError(f"expected 'u v w', got '{line}'", lineno)
        u, v = _parse_id(tokens[0], lineno), _parse_id(tokens[1], lineno)
        w = _parse_float(tokens[2], "weight", lineno)
        if w <= 0:
            raise InstanceFormatError(f"nonpositive weight {w} on edge ({u}, {v})", lineno)
        if u == v:
            raise InstanceFormatError(f"self-loop at vertex {u}", lineno)
        vertex_ids.update((u, v))
        edges.append((u, v, w))
    return sorted(vertex_ids), edges


def parse_sites(sites_text: str) -> Tuple[Optional[int], Dict[int, Tuple[int, List[Tuple[float, float]]]]]:
    """Parse a site table: "start: <id>" plus "v: c1@p1, c2@p2" lines.

    Returns the start id and, per vertex id, the line it was declared on and its tiers.
    """
    start: Optional[int] = None
    sites: Dict[int, Tuple[int, List[Tuple[float, float]]]] = {}
    for lineno, raw in enumerate(sites_text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        key, sep, rest = line.partition(':')
        if not sep:
            raise InstanceFormatError(f"expected 'v: c@p, ...' or 'start: <id>', got '{line}'", lineno)
        key = key.strip()
        if key == 'start':
            if start is not None:
                raise InstanceFormatError("duplicate start header", lineno)
            start = _parse_id(rest.strip(), lineno)
            continue
        vertex = _parse_id(key, lineno)
        if vertex in sites:
            raise InstanceFormatError(f"duplicate site line for vertex {vertex}", lineno)
        tiers = []
        for entry in filter(None, (item.strip() for item in rest.split(','))):
            cost_text, at, prob_text = entry.partition('@')
            if not at:
                raise InstanceFormatError(f"tier '{entry}' is not of the form cost@prob", lineno)
            cost = _parse_float(cost_text.strip(), "cost", lineno)
            prob = _parse_float(prob_text.strip(), "probability", lineno)
            if cost < 0:
                raise InstanceFormatError(f"negative cost {cost}", lineno)
            if not 0 <= prob <= 1:
                raise InstanceFormatError(f"probability {prob} outside [0, 1]", lineno)
            tiers.append((cost, prob))
        if math.fsum(p for _, p in tiers) > 1.0 + settings.tolerance:
            raise InstanceFormatError("probability mass exceeds 1", lineno)
        if len({c for c, _ in tiers}) > settings.max_tiers:
            raise InstanceFormatError(f"more than {settings.max_tiers} tiers", lineno)
        sites[vertex] = (lineno, tiers)
    return start, sites


def load_instance(graph_text: str, sites_text: str) -> Instance:
    """Build an Instance from the canonical edge-list and site-table documents.

    Vertex ids are normalized to dense 0-based indices; ``Instance.labels``
    keeps the original ids for output.
    """
    vertex_ids, edges = parse_graph(graph_text)
    start, sites = parse_sites(sites_text)
    if start is None:
        raise InstanceFormatError("missing start vertex ('start: <id>' header)")

    index = {vid: i for i, vid in enumerate(vertex_ids)}
    if start not in index:
        raise InstanceFormatError(f"unknown start vertex {start}")
    tiers = {}
    for vid, (lineno, vertex_tiers) in sites.items():
        if vid not in index:
            raise InstanceFormatError(f"unknown vertex {vid}", lineno)
        if vid == start and vertex_tiers:
            logger.warning(f"Dropping {len(vertex_tiers)} tiers at start vertex {start}: the item cannot be obtained there")
            continue
        tiers[index[vid]] = vertex_tiers

    try:
        instance = Instance.build(
            n=len(vertex_ids),
            edges=[(index[u], index[v], w) for u, v, w in edges],
            tiers=tiers,
            start=index[start],
            labels=vertex_ids,
        )
    except ValidationError as e:
        raise InstanceFormatError(str(e)) from e

    logger.info(f"Loaded instance: {instance.n} vertices, {instance.graph.number_of_edges()} edges, "
                f"{len(instance.tier_bearing())} sites")
    return instance


def read_instance(graph_path: PathLike, sites_path: PathLike) -> Instance:
    return load_instance(Path(graph_path).read_text(encoding='utf-8'), Path(sites_path).read_text(encoding='utf-8'))


def write_instance(instance: Instance) -> Tuple[str, str]:
    """Serialize an instance back to (graph_text, sites_text) using its original labels"""
    labels = instance.labels
    graph_lines = ["# u v w"]
    for u, v, w in sorted(instance.graph.edges(data='weight')):
        graph_lines.append(f"{labels[u]} {labels[v]} {w!r}")
    for v in sorted(instance.graph.nodes):
        if instance.graph.degree(v) == 0:
            graph_lines.append(f"{labels[v]}")

    site_lines = [f"start: {labels[instance.start]}"]
    for v, site in sorted(enumerate(instance.sites), key=lambda item: labels[item[0]]):
        if site.tiers:
            site_lines.append(f"{labels[v]}: " + ", ".join(f"{t.cost!r}@{t.prob!r}" for t in site.tiers))
    return "\n".join(graph_lines) + "\n", "\n".join(site_lines) + "\n"


def save_instance(instance: Instance, graph_path: PathLike, sites_path: PathLike) -> None:
    graph_text, sites_text = write_instance(instance)
    Path(graph_path).write_text(graph_text, encoding='utf-8')
    Path(sites_path).write_text(sites_text, encoding='utf-8')
    logger.info(f"Instance written to {graph_path} and {sites_path}")


def write_dtsp(dtsp: DtspInstance) -> str:
    """Serialize a Deadline-TSP instance: edge lines, a root header and prize/deadline columns"""
    lines = ["# u v length"]
    lines.extend(f"{u} {v} {w!r}" for u, v, w in sorted(dtsp.graph.edges(data='weight')))
    lines.append(f"root: {dtsp.root}")
    lines.append("# v: prize deadline")
    for v in sorted(dtsp.graph.nodes):
        lines.append(f"{v}: prize={dtsp.prize[v]!r} deadline={dtsp.deadline[v]!r}")
    return "\n".join(lines) + "\n"


def _read_config_values(path: Path) -> Dict[str, Any]:
    if path.suffix in ('.yaml', '.yml'):
        with open(path, 'r', encoding='utf-8') as f:
            values = yaml.safe_load(f) or {}
        if not isinstance(values, dict):
            raise ValueError(f"{path}: expected a flat mapping")
        return values
    return {key: value for key, value in dotenv_values(path).items() if value is not None}


def load_experiment_config(path: PathLike) -> ExperimentConfig:
    """Read a flat key=value (or flat YAML) experiment file.

    Keys naming GeneratorConfig fields configure the generator, keys prefixed
    with ``aco_`` configure the ant colony, the rest configure the sweep.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    values = _read_config_values(path)

    generator = {k: v for k, v in values.items() if k in GeneratorConfig.model_fields}
    aco = {k[len('aco_'):]: v for k, v in values.items() if k.startswith('aco_')}
    rest = {k: v for k, v in values.items() if k not in generator and not k.startswith('aco_')}
    unknown = (set(rest) - set(ExperimentConfig.model_fields)) | {f"aco_{k}" for k in set(aco) - set(AcoParams.model_fields)}
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")

    config = ExperimentConfig.model_validate({**rest, 'generator': generator, 'aco': aco})
    logger.info(f"Experiment config loaded from {path}: sweep {config.sweep_parameter}={config.sweep_values}, solvers {config.solvers}")
    return config
