import numpy as np
import pytest

from psearch.models import Walk
from psearch.services.simulation import simulate, trial_outcomes

from .conftest import make_instance, random_instance


def test_half_probability_within_band(single_site):
    walk = Walk.of(single_site, [0, 1])
    report = simulate(single_site, walk, 5.0, trials=100_000, seed=1)
    assert report.analytic_rate == 0.5
    assert report.stderr == pytest.approx(0.001581, abs=1e-6)
    # four standard errors keeps a fixed seed comfortably inside the band
    assert report.deviation <= 4.0


def test_zero_budget_never_succeeds(single_site):
    report = simulate(single_site, Walk.of(single_site, [0, 1]), 0.0, trials=1_000)
    assert report.successes == 0
    assert report.analytic_rate == 0.0
    assert report.deviation == 0.0


def test_certain_site_always_succeeds():
    instance = make_instance(2, [(0, 1, 1.0)], {1: [(2.0, 1.0)]})
    report = simulate(instance, Walk.of(instance, [0, 1]), 3.0, trials=5_000)
    assert report.successes == 5_000
    assert report.empirical_rate == 1.0


def test_same_seed_same_report(star):
    walk = Walk.of(star, [0, 1, 0, 2, 0, 3])
    first = simulate(star, walk, 10.0, trials=20_000, seed=7)
    second = simulate(star, walk, 10.0, trials=20_000, seed=7)
    assert first == second


def test_thread_count_does_not_change_outcome(star):
    walk = Walk.of(star, [0, 1, 0, 2])
    serial = simulate(star, walk, 6.0, trials=35_000, seed=3, threads=1)
    parallel = simulate(star, walk, 6.0, trials=35_000, seed=3, threads=4)
    assert serial.successes == parallel.successes


def test_stopping_rule_does_not_change_indicators():
    for seed in range(10):
        instance = random_instance(seed, n=5, max_tiers=3)
        vertices = [instance.start]
        rng = np.random.default_rng(seed)
        for _ in range(6):
            vertices.append(int(rng.choice(sorted(instance.graph[vertices[-1]]))))
        walk = Walk.of(instance, vertices)
        stop = trial_outcomes(instance, walk, 12.0, 2_000, seed=seed, stop_on_success=True)
        keep = trial_outcomes(instance, walk, 12.0, 2_000, seed=seed, stop_on_success=False)
        assert np.array_equal(stop, keep)


def test_rates_track_analytic_values():
    outside = 0
    for seed in range(20):
        instance = random_instance(seed, n=5, max_tiers=3)
        vertices = [instance.start]
        rng = np.random.default_rng(100 + seed)
        for _ in range(5):
            vertices.append(int(rng.choice(sorted(instance.graph[vertices[-1]]))))
        report = simulate(instance, Walk.of(instance, vertices), 10.0, trials=20_000, seed=seed)
        assert 0 <= report.successes <= report.trials
        if report.deviation > 3.0:
            outside += 1
    assert outside <= 2


def test_csv_row_has_full_precision(single_site):
    report = simulate(single_site, Walk.of(single_site, [0, 1]), 5.0, trials=10, seed=0)
    assert report.csv_header() == 'trials,successes,empirical_rate,analytic_rate,stderr'
    fields = report.csv_row().split(',')
    assert int(fields[0]) == 10
    assert float(fields[3]) == 0.5
    assert float(fields[4]) == report.stderr


@pytest.mark.parametrize("trials", [0, -5])
def test_nonpositive_trials_are_rejected(single_site, trials):
    with pytest.raises(ValueError, match="trials must be positive"):
        simulate(single_site, Walk.of(single_site, [0, 1]), 5.0, trials=trials)
