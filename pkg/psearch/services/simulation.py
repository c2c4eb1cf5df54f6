import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

from ..config import settings
from ..models import Instance, SimReport, Walk
from .evaluation import arrivals_of, success_probability

logger = logging.getLogger(__name__)


def _realized_costs(instance: Instance, v: int, seed: int, chunk: int, size: int) -> np.ndarray:
    """Cost realizations of vertex v for one chunk of trials; inf where the item is unavailable.

    Each (seed, vertex, chunk) owns its own stream, so chunks can run in any order.
    """
    tiers = instance.sites[v].tiers
    draws = np.random.default_rng(np.random.SeedSequence([seed, v, chunk])).random(size)
    cumulative = np.cumsum([t.prob for t in tiers])
    costs = np.append(np.array([t.cost for t in tiers], dtype=float), np.inf)
    return costs[np.searchsorted(cumulative, draws, side='right')]


def trial_outcomes(
    instance: Instance,
    walk: Walk,
    budget: float,
    trials: int,
    seed: int = 0,
    chunk: int = 0,
    stop_on_success: bool = True,
) -> np.ndarray:
    """Success indicator of each trial in one chunk.

    With ``stop_on_success`` the agent stops searching at its first purchase;
    otherwise it keeps walking and a trial counts when any first arrival could buy.
    """
    tol = settings.tolerance
    success = np.zeros(trials, dtype=bool)
    searching = np.ones(trials, dtype=bool)
    for spent, v in arrivals_of(walk):
        if not instance.sites[v].tiers:
            continue
        remaining = budget - spent
        if remaining < -tol:
            break
        affordable = _realized_costs(instance, v, seed, chunk, trials) <= remaining + tol
        if stop_on_success:
            bought = searching & affordable
            success |= bought
            searching &= ~bought
        else:
            success |= affordable
    return success


def _chunks(trials: int, size: int) -> List[Tuple[int, int]]:
    return [(i, min(size, trials - i * size)) for i in range(math.ceil(trials / size))]


def simulate(
    instance: Instance,
    walk: Walk,
    budget: float,
    trials: Optional[int] = None,
    seed: int = 0,
    threads: Optional[int] = None,
    stop_on_success: bool = True,
) -> SimReport:
    """Monte-Carlo success rate of a fixed plan against its analytic probability"""
    if trials is None:
        trials = settings.mc_trials
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if threads is None:
        threads = settings.threads
    chunks = _chunks(trials, settings.mc_chunk_size)

    def run(chunk: Tuple[int, int]) -> int:
        index, size = chunk
        return int(trial_outcomes(instance, walk, budget, size, seed, index, stop_on_success).sum())

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            successes = sum(executor.map(run, chunks))
    else:
        successes = sum(run(chunk) for chunk in chunks)

    analytic = success_probability(instance, walk, budget)
    report = SimReport(
        trials=trials,
        successes=successes,
        empirical_rate=successes / trials,
        analytic_rate=analytic,
        stderr=math.sqrt(analytic * (1.0 - analytic) / trials),
    )
    logger.info(f"Simulated {trials} trials: empirical {report.empirical_rate:.6f}, analytic {analytic:.6f}")
    return report
