import asyncio
import io
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from ..config import settings
from ..exceptions import PsearchError
from ..models import ExperimentConfig, Instance, SearchLimits, SolveStatus, SolverOptions
from .evaluation import success_probability
from .generators import generate_instance
from .solvers import MAX_PROBABILITY_SOLVERS, MIN_BUDGET_SOLVERS, solve_max_probability, solve_min_budget

logger = logging.getLogger(__name__)

STRING_COLUMNS = ('row_type', 'solver', 'status')
INTEGER_COLUMNS = ('instance_seed', 'walk_length', 'count')
FLOAT_COLUMNS = ('sweep_value', 'budget', 'probability', 'wall_time_ms', 'mean', 'std')

# Mean BL budget may trail the optimum by this much before a warning is logged
BL_GAP_WARNING = 0.05


def value_column(mode: str) -> str:
    return 'budget' if mode == 'min_budget' else 'probability'


def result_columns(mode: str) -> List[str]:
    return ['row_type', 'sweep_value', 'instance_seed', 'solver', value_column(mode), 'walk_length', 'wall_time_ms', 'status',
            'mean', 'std', 'count']


def _typed(frame: pd.DataFrame) -> pd.DataFrame:
    frame = frame.copy()
    for column in frame.columns:
        if column in STRING_COLUMNS:
            frame[column] = frame[column].astype(str)
        elif column in INTEGER_COLUMNS:
            frame[column] = frame[column].astype('Int64')
        elif column in FLOAT_COLUMNS:
            frame[column] = frame[column].astype(float)
    return frame.reset_index(drop=True)


def emit_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, lineterminator='\n')


def parse_csv(text: str) -> pd.DataFrame:
    frame = pd.read_csv(
        io.StringIO(text),
        dtype={column: str for column in STRING_COLUMNS} | {column: 'Int64' for column in INTEGER_COLUMNS},
        float_precision='round_trip',
    )
    return _typed(frame)


class ExperimentRunner:
    """Paired sweep: every (sweep point, instance seed) runs every configured solver.

    Cells run on a thread pool of ``config.threads`` workers; the resulting
    table is sorted canonically, so execution order never shows in the output.
    """

    def __init__(self, config: ExperimentConfig):
        registry = MIN_BUDGET_SOLVERS if config.mode == 'min_budget' else MAX_PROBABILITY_SOLVERS
        unknown = [name for name in config.solvers if name not in registry]
        if unknown:
            raise ValueError(f"unknown {config.mode} solvers {unknown}, expected some of {sorted(registry)}")
        self.config = config
        self.options = SolverOptions(
            limits=SearchLimits(max_expansions=config.max_expansions, time_limit_s=config.time_limit_s),
            aco=config.aco,
            score_mode=config.aco.score_mode,
            kmst_mode=config.kmst_mode,
            rounding=config.rounding,
        )
        self.seeds = [config.base_seed + i for i in range(config.instances_per_point)]
        self._instances: Dict[Tuple[Optional[float], int], Instance] = {}

    def _instance_key(self, sweep_value: float, seed: int) -> Tuple[Optional[float], int]:
        return (sweep_value if self.config.sweep_parameter == 'prob_mean' else None, seed)

    def _generate(self, key: Tuple[Optional[float], int]) -> Instance:
        prob_mean, seed = key
        generator = self.config.generator
        if prob_mean is not None:
            generator = generator.model_copy(update={'prob_mean': prob_mean})
        return generate_instance(generator, seed)

    def _run_cell(self, sweep_value: float, seed: int, solver: str) -> Dict[str, Any]:
        config = self.config
        instance = self._instances[self._instance_key(sweep_value, seed)]
        p_succ = sweep_value if config.sweep_parameter == 'p_succ' else config.p_succ
        budget = sweep_value if config.sweep_parameter == 'budget' else config.budget
        row: Dict[str, Any] = {
            'row_type': 'detail',
            'sweep_value': sweep_value,
            'instance_seed': seed,
            'solver': solver,
            value_column(config.mode): math.nan,
            'walk_length': None,
            'wall_time_ms': math.nan,
            'status': SolveStatus.OK.value,
            'mean': math.nan,
            'std': math.nan,
            'count': None,
        }
        started = time.perf_counter()
        try:
            if config.mode == 'min_budget':
                solution = solve_min_budget(solver, instance, p_succ, self.options)
                value = solution.budget
                if success_probability(instance, solution.walk, solution.budget) < p_succ - settings.tolerance:
                    logger.error(f"{solver} on seed {seed} returned an infeasible plan for p_succ={p_succ}")
                    row['status'] = SolveStatus.ERROR.value
            else:
                solution = solve_max_probability(solver, instance, budget, self.options)
                value = success_probability(instance, solution.walk, budget)
            row[value_column(config.mode)] = value
            row['walk_length'] = len(solution.walk) - 1
            if row['status'] == SolveStatus.OK.value:
                row['status'] = solution.status.value
        except PsearchError as e:
            logger.info(f"{solver} on seed {seed} at {config.sweep_parameter}={sweep_value}: {e.status.value} ({e})")
            row['status'] = e.status.value
        except Exception as e:
            logger.error(f"Error running {solver} on seed {seed}: {e}")
            row['status'] = SolveStatus.ERROR.value
        if config.include_timing:
            row['wall_time_ms'] = (time.perf_counter() - started) * 1000.0
        return row

    def _aggregate(self, details: pd.DataFrame) -> pd.DataFrame:
        column = value_column(self.config.mode)
        solved = details[details['status'] == SolveStatus.OK.value]
        grouped = solved.groupby(['sweep_value', 'solver'])[column].agg(['mean', 'std', 'count']).reset_index()
        # Points where a solver never succeeded still get a row, with count 0
        cells = details[['sweep_value', 'solver']].drop_duplicates()
        grouped = cells.merge(grouped, on=['sweep_value', 'solver'], how='left')
        grouped['count'] = grouped['count'].fillna(0)
        grouped['row_type'] = 'aggregate'
        grouped['status'] = SolveStatus.OK.value
        grouped['instance_seed'] = None
        grouped['walk_length'] = None
        grouped[column] = math.nan
        grouped['wall_time_ms'] = math.nan
        return grouped.sort_values(['sweep_value', 'solver'], kind='stable')

    def _report_bl_gap(self, details: pd.DataFrame) -> None:
        if self.config.mode != 'min_budget' or not {'bl', 'optimal'} <= set(self.config.solvers):
            return
        solved = details[details['status'] == SolveStatus.OK.value]
        table = solved.pivot_table(index=['sweep_value', 'instance_seed'], columns='solver', values='budget')
        paired = table[['bl', 'optimal']].dropna() if {'bl', 'optimal'} <= set(table.columns) else None
        if paired is None or paired.empty:
            return
        for sweep_value, group in paired.groupby(level='sweep_value'):
            optimum = group['optimal'].mean()
            gap = (group['bl'].mean() - optimum) / optimum if optimum > 0 else 0.0
            if gap > BL_GAP_WARNING:
                logger.warning(f"Mean BL budget is {gap:.1%} above optimal at {self.config.sweep_parameter}={sweep_value}")
            else:
                logger.info(f"Mean BL budget is {gap:.1%} above optimal at {self.config.sweep_parameter}={sweep_value}")

    async def run(self) -> pd.DataFrame:
        config = self.config
        loop = asyncio.get_running_loop()
        logger.info(f"Experiment: {config.mode}, {config.sweep_parameter} in {config.sweep_values}, "
                    f"{len(self.seeds)} instances per point, solvers {config.solvers}, {config.threads} threads")

        with ThreadPoolExecutor(max_workers=config.threads) as executor:
            keys = sorted({self._instance_key(value, seed) for value in config.sweep_values for seed in self.seeds},
                          key=lambda key: (-1.0 if key[0] is None else key[0], key[1]))
            instances = await asyncio.gather(*(loop.run_in_executor(executor, self._generate, key) for key in keys))
            self._instances = dict(zip(keys, instances))
            logger.info(f"Generated {len(instances)} instances")

            cells = [(value, seed, solver) for value in config.sweep_values for seed in self.seeds for solver in config.solvers]
            rows = await asyncio.gather(*(loop.run_in_executor(executor, self._run_cell, *cell) for cell in cells))

        columns = result_columns(config.mode)
        details = pd.DataFrame(rows, columns=columns).sort_values(['sweep_value', 'instance_seed', 'solver'], kind='stable')
        self._report_bl_gap(details)
        aggregates = self._aggregate(details)[columns]
        frame = _typed(pd.concat([details, aggregates], ignore_index=True))
        logger.info(f"Experiment finished: {len(details)} detail rows, {len(aggregates)} aggregate rows")
        return frame


def run_experiment(config: ExperimentConfig) -> pd.DataFrame:
    return asyncio.run(ExperimentRunner(config).run())
