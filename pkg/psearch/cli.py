import functools
import logging
import sys
from pathlib import Path
from typing import Any, Callable, List, Optional

import click
from pydantic import ValidationError

from .config import settings
from .exceptions import InstanceFormatError, PsearchError
from .models import AcoParams, GeneratorConfig, Instance, SearchLimits, Solution, SolveStatus, SolverOptions, Walk
from .services.deadline_tsp import DTSP_SOLVERS, approx_max_probability
from .services.evaluation import collected_prize, collection_events, minimal_budget_for_walk, success_probability
from .services.experiment import emit_csv, run_experiment
from .services.generators import generate_instance
from .services.simulation import simulate
from .services.solvers import MAX_PROBABILITY_SOLVERS, MIN_BUDGET_SOLVERS, solve_max_probability, solve_min_budget
from .services.transforms import round_prizes, to_deadline_tsp, to_single_cost, truncate_saturated_tiers
from .storage import load_experiment_config, read_instance, save_instance, write_dtsp, write_instance
from .utils import SearchTrace

logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_CODES = {
    SolveStatus.OK: 0,
    SolveStatus.NO_SOLUTION: 3,
    SolveStatus.STUCK: 3,
    SolveStatus.INFEASIBLE: 4,
    SolveStatus.LIMIT_EXCEEDED: 5,
}
EXIT_OTHER = 6


def exit_code(status: SolveStatus) -> int:
    return EXIT_CODES.get(status, EXIT_OTHER)


def handle_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Map library errors to the documented exit codes"""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except InstanceFormatError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_USAGE)
        except PsearchError as e:
            click.echo(f"{e.status.value}: {e}", err=True)
            sys.exit(exit_code(e.status))
        except (ValidationError, ValueError, FileNotFoundError) as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_USAGE)

    return wrapper


def setup_logging(level: str) -> None:
    logging.basicConfig(
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        level=getattr(logging, level.upper()),
        stream=sys.stderr,
        force=True,
    )


def parse_walk(instance: Instance, text: str) -> Walk:
    """Walk given as original vertex ids separated by spaces or commas"""
    index = {label: v for v, label in enumerate(instance.labels)}
    vertices = []
    for token in text.replace(',', ' ').split():
        label = int(token)
        if label not in index:
            raise ValueError(f"walk vertex {label} is not in the graph")
        vertices.append(index[label])
    return Walk.of(instance, vertices)


def print_solution(instance: Instance, solution: Solution) -> None:
    click.echo(f"status: {solution.status.value}")
    click.echo(f"solver: {solution.solver}")
    click.echo(f"walk: {' '.join(str(v) for v in solution.walk.labelled(instance))}")
    click.echo(f"budget: {solution.budget!r}")
    click.echo(f"probability: {solution.probability!r}")
    click.echo(f"optimal: {str(solution.optimal).lower()}")
    for key, value in solution.stats.items():
        if key == 'ledger':
            for v, prize, deadline in value:
                click.echo(f"prize {v}: {prize!r} deadline {deadline!r}")
        else:
            click.echo(f"{key}: {value}")


def instance_options(func: Callable[..., Any]) -> Callable[..., Any]:
    func = click.option('--sites', 'sites_path', required=True, type=click.Path(exists=True, dir_okay=False), help='Site table file')(func)
    func = click.option('--graph', 'graph_path', required=True, type=click.Path(exists=True, dir_okay=False), help='Edge list file')(func)
    return func


def limit_options(func: Callable[..., Any]) -> Callable[..., Any]:
    func = click.option('--no-prune', is_flag=True, help='Disable bound pruning in exact searches')(func)
    func = click.option('--time-limit', type=float, default=None, help='Seconds before a search returns its incumbent')(func)
    func = click.option('--max-expansions', type=int, default=None, help='Node expansion limit for exact searches')(func)
    return func


def make_limits(max_expansions: Optional[int], time_limit: Optional[float], no_prune: bool) -> SearchLimits:
    return SearchLimits(
        max_expansions=max_expansions or settings.max_expansions,
        time_limit_s=time_limit,
        prune=not no_prune,
    )


@click.group()
@click.option('--log-level', default=None, help='Logging level, defaults to PSEARCH_LOG_LEVEL')
def cli(log_level: Optional[str]) -> None:
    """Probabilistic physical search on graphs"""
    setup_logging(log_level or settings.log_level)


@cli.command()
@click.option('--graph-out', required=True, type=click.Path(dir_okay=False), help='Where to write the edge list')
@click.option('--sites-out', required=True, type=click.Path(dir_okay=False), help='Where to write the site table')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--n', type=int, default=25_000, show_default=True, help='Number of vertices')
@click.option('--neighbors', type=int, default=6, show_default=True)
@click.option('--rewire-prob', type=float, default=0.09, show_default=True)
@click.option('--prob-mean', type=float, default=0.24, show_default=True)
@click.option('--topology', type=click.Choice(['small_world', 'file']), default='small_world', show_default=True)
@click.option('--from-graph', 'source_graph', type=click.Path(exists=True, dir_okay=False), default=None, help='Edge list to sample from')
@click.option('--sample-size', type=int, default=None, help='Breadth-first ball size when sampling a file graph')
@handle_errors
def gen(graph_out: str, sites_out: str, seed: int, n: int, neighbors: int, rewire_prob: float, prob_mean: float,
        topology: str, source_graph: Optional[str], sample_size: Optional[int]) -> None:
    """Generate an instance and write it in the canonical text format"""
    config = GeneratorConfig(
        topology=topology,
        n=n,
        neighbors=neighbors,
        rewire_prob=rewire_prob,
        prob_mean=prob_mean,
        graph_path=source_graph,
        sample_size=sample_size,
        seed=seed,
    )
    instance = generate_instance(config, seed)
    save_instance(instance, graph_out, sites_out)
    click.echo(f"vertices: {instance.n}")
    click.echo(f"edges: {instance.graph.number_of_edges()}")


@cli.command()
@instance_options
@click.option('--algo', type=click.Choice(sorted(set(MIN_BUDGET_SOLVERS) | set(MAX_PROBABILITY_SOLVERS))), default='optimal', show_default=True)
@click.option('--p-succ', type=float, default=None, help='Target success probability (Min-Budget)')
@click.option('--budget', type=float, default=None, help='Fixed budget (Max-Probability)')
@click.option('--seed', type=int, default=0, show_default=True, help='ACO random seed')
@click.option('--iterations', type=int, default=50, show_default=True, help='ACO iterations')
@click.option('--evaporation', type=float, default=0.05, show_default=True, help='ACO evaporation rate')
@click.option('--reward', type=click.Choice(['cardinality', 'prize']), default='cardinality', show_default=True)
@click.option('--score-mode', type=click.Choice(['product', 'additive']), default='product', show_default=True)
@click.option('--all-visits', is_flag=True, help='Keep fully counted sites on the greedy frontier')
@click.option('--kmst-mode', type=click.Choice(['exact', 'heuristic']), default='exact', show_default=True)
@click.option('--no-rounding', is_flag=True, help='Keep real prizes in the Deadline-TSP reduction')
@click.option('--truncate', is_flag=True, help='Drop tiers after a saturated probability prefix')
@click.option('--trace', 'trace_path', type=click.Path(dir_okay=False), default=None, help='JSON-lines search trace output')
@limit_options
@handle_errors
def solve(graph_path: str, sites_path: str, algo: str, p_succ: Optional[float], budget: Optional[float], seed: int, iterations: int,
          evaporation: float, reward: str, score_mode: str, all_visits: bool, kmst_mode: str, no_rounding: bool, truncate: bool,
          trace_path: Optional[str], max_expansions: Optional[int], time_limit: Optional[float], no_prune: bool) -> None:
    """Solve one instance with one algorithm: Min-Budget with --p-succ, Max-Probability with --budget"""
    if (p_succ is None) == (budget is None):
        raise click.UsageError("give exactly one of --p-succ and --budget")
    instance = read_instance(graph_path, sites_path)
    if truncate:
        instance = truncate_saturated_tiers(instance)
    options = SolverOptions(
        limits=make_limits(max_expansions, time_limit, no_prune),
        aco=AcoParams(iterations=iterations, evaporation=evaporation, seed=seed, reward=reward, score_mode=score_mode),
        score_mode=score_mode,
        unvisited_only=not all_visits,
        kmst_mode=kmst_mode,
        rounding=not no_rounding,
        truncate=truncate,
    )
    stream = open(trace_path, 'w', encoding='utf-8') if trace_path else None
    trace = SearchTrace(stream) if stream else None
    try:
        if p_succ is not None:
            if algo not in MIN_BUDGET_SOLVERS:
                raise click.UsageError(f"--algo={algo} solves Max-Probability; use --budget")
            solution = solve_min_budget(algo, instance, p_succ, options, trace)
        else:
            if algo not in MAX_PROBABILITY_SOLVERS:
                raise click.UsageError(f"--algo={algo} solves Min-Budget; use --p-succ")
            solution = solve_max_probability(algo, instance, budget, options, trace)
    finally:
        if stream:
            trace.close()
            stream.close()
    print_solution(instance, solution)
    sys.exit(exit_code(solution.status))


@cli.command()
@instance_options
@click.option('--budget', type=float, required=True)
@click.option('--solver', type=click.Choice(sorted(DTSP_SOLVERS)), default='exact', show_default=True, help='Deadline-TSP solver')
@click.option('--no-rounding', is_flag=True, help='Keep real prizes')
@click.option('--truncate', is_flag=True, help='Drop tiers after a saturated probability prefix')
@limit_options
@handle_errors
def maxprob(graph_path: str, sites_path: str, budget: float, solver: str, no_rounding: bool, truncate: bool,
            max_expansions: Optional[int], time_limit: Optional[float], no_prune: bool) -> None:
    """Max-Probability through the Deadline-TSP reduction"""
    instance = read_instance(graph_path, sites_path)
    limits = make_limits(max_expansions, time_limit, no_prune)
    dtsp_solver = DTSP_SOLVERS[solver](limits) if solver == 'exact' else DTSP_SOLVERS[solver]()
    solution = approx_max_probability(instance, budget, dtsp_solver, rounding=not no_rounding, truncate=truncate)
    print_solution(instance, solution)
    sys.exit(exit_code(solution.status))


@cli.command(name='eval')
@instance_options
@click.option('--walk', 'walk_text', required=True, help='Vertex ids, space or comma separated, starting at the start vertex')
@click.option('--budget', type=float, default=None)
@click.option('--p-succ', type=float, default=None, help='Also report the minimal budget reaching this probability')
@handle_errors
def evaluate(graph_path: str, sites_path: str, walk_text: str, budget: Optional[float], p_succ: Optional[float]) -> None:
    """Score a given walk: success probability, prize and counted tiers"""
    if budget is None and p_succ is None:
        raise click.UsageError("give --budget, --p-succ or both")
    instance = read_instance(graph_path, sites_path)
    walk = parse_walk(instance, walk_text)
    click.echo(f"walk_weight: {walk.travel_cost!r}")
    if budget is not None:
        click.echo(f"probability: {success_probability(instance, walk, budget)!r}")
        click.echo(f"prize: {collected_prize(instance, walk, budget)!r}")
        for event in collection_events(instance, walk, budget):
            click.echo(f"counted {instance.labels[event.vertex]}: {len(event.tiers_counted)} tiers at spent {event.arrival_spent!r}")
    if p_succ is not None:
        click.echo(f"minimal_budget: {minimal_budget_for_walk(instance, walk, p_succ)!r}")


@cli.command()
@instance_options
@click.option('--walk', 'walk_text', required=True, help='Vertex ids, space or comma separated')
@click.option('--budget', type=float, required=True)
@click.option('--trials', type=int, default=None, help='Defaults to PSEARCH_MC_TRIALS (100000)')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--header', is_flag=True, help='Print the CSV header line first')
@handle_errors
def validate(graph_path: str, sites_path: str, walk_text: str, budget: float, trials: Optional[int], seed: int, header: bool) -> None:
    """Monte-Carlo check of a plan against its analytic success probability"""
    instance = read_instance(graph_path, sites_path)
    report = simulate(instance, parse_walk(instance, walk_text), budget, trials, seed)
    if header:
        click.echo(report.csv_header())
    click.echo(report.csv_row())


@cli.command()
@instance_options
@click.option('--to', 'target', type=click.Choice(['single-cost', 'deadline-tsp']), required=True)
@click.option('--budget', type=float, default=None, help='Budget for the Deadline-TSP conversion')
@click.option('--round', 'round_', is_flag=True, help='Round Deadline-TSP prizes to integers')
@click.option('--truncate', is_flag=True, help='Drop tiers after a saturated probability prefix')
@click.option('--graph-out', type=click.Path(dir_okay=False), default=None)
@click.option('--sites-out', type=click.Path(dir_okay=False), default=None)
@handle_errors
def transform(graph_path: str, sites_path: str, target: str, budget: Optional[float], round_: bool, truncate: bool,
              graph_out: Optional[str], sites_out: Optional[str]) -> None:
    """Emit the single-cost split or the Deadline-TSP instance"""
    instance = read_instance(graph_path, sites_path)
    if truncate:
        instance = truncate_saturated_tiers(instance)
    single = to_single_cost(instance)
    if target == 'single-cost':
        graph_text, sites_text = write_instance(single.instance)
        if graph_out and sites_out:
            Path(graph_out).write_text(graph_text, encoding='utf-8')
            Path(sites_out).write_text(sites_text, encoding='utf-8')
        else:
            click.echo(graph_text, nl=False)
            click.echo(sites_text, nl=False)
        return
    if budget is None:
        raise click.UsageError("--to=deadline-tsp needs --budget")
    dtsp = to_deadline_tsp(single, budget)
    if round_:
        dtsp = round_prizes(dtsp)
    text = write_dtsp(dtsp)
    if graph_out:
        Path(graph_out).write_text(text, encoding='utf-8')
    else:
        click.echo(text, nl=False)


@cli.command()
@click.option('--config', 'config_path', required=True, type=click.Path(exists=True, dir_okay=False), help='key=value or YAML experiment file')
@click.option('--output', type=click.Path(dir_okay=False), default=None, help='CSV path, overrides output_path; stdout when neither is set')
@click.option('--threads', type=int, default=None, help='Worker threads, defaults to PSEARCH_THREADS')
@click.option('--no-timing', is_flag=True, help='Leave wall_time_ms empty so reruns are byte-identical')
@handle_errors
def bench(config_path: str, output: Optional[str], threads: Optional[int], no_timing: bool) -> None:
    """Run a paired experiment sweep and write the result table as CSV"""
    config = load_experiment_config(config_path)
    updates: dict = {}
    if threads is not None:
        updates['threads'] = threads
    if no_timing:
        updates['include_timing'] = False
    if updates:
        config = config.model_validate({**config.model_dump(), **updates})
    text = emit_csv(run_experiment(config))
    target = output or config.output_path
    if target:
        Path(target).write_text(text, encoding='utf-8')
        logger.info(f"Results written to {target}")
    else:
        click.echo(text, nl=False)


def main(argv: Optional[List[str]] = None) -> None:
    cli.main(args=argv, prog_name='psearch')
