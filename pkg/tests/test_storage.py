import logging

import pytest

from psearch.exceptions import InstanceFormatError
from psearch.models import Walk
from psearch.services.evaluation import success_probability
from psearch.storage import load_experiment_config, load_instance, parse_sites, write_dtsp, write_instance
from psearch.services.transforms import to_deadline_tsp, to_single_cost


def test_minimal_instance():
    instance = load_instance("0 1 2.0\n", "start: 0\n1: 3.0@0.5\n")
    assert instance.n == 2
    assert instance.graph.number_of_edges() == 1
    assert instance.sites[1].tiers[0].cost == 3.0
    assert instance.sites[1].tiers[0].prob == 0.5
    assert instance.sites[0].tiers == ()


def test_parallel_edges_collapse_to_minimum():
    instance = load_instance("0 1 2.0\n0 1 5.0\n", "start: 0\n")
    assert instance.weight(0, 1) == 2.0


def test_probability_mass_over_one_reports_line():
    with pytest.raises(InstanceFormatError, match="line 2: probability mass exceeds 1"):
        load_instance("0 1 2.0\n", "start: 0\n1: 1@0.7, 2@0.5\n")


def test_duplicate_cost_tiers_are_merged():
    instance = load_instance("0 1 1\n", "start: 0\n1: 2@0.2, 2@0.3, 1@0.1\n")
    tiers = instance.sites[1].tiers
    assert [t.cost for t in tiers] == [1.0, 2.0]
    assert tiers[1].prob == pytest.approx(0.5)


@pytest.mark.parametrize("graph_text, sites_text, message", [
    ("0 1 0\n", "start: 0\n", "nonpositive weight"),
    ("0 1 -1\n", "start: 0\n", "nonpositive weight"),
    ("0 0 1\n", "start: 0\n", "self-loop"),
    ("0 1\n", "start: 0\n", "expected 'u v w'"),
    ("0 1 x\n", "start: 0\n", "not a number"),
    ("0 1 1\n", "1: 1@0.5\n", "missing start"),
    ("0 1 1\n", "start: 7\n", "unknown start vertex 7"),
    ("0 1 1\n", "start: 0\n5: 1@0.5\n", "line 2: unknown vertex 5"),
    ("0 1 1\n", "start: 0\n1: 1@1.5\n", "outside \\[0, 1\\]"),
    ("0 1 1\n", "start: 0\n1: -1@0.5\n", "negative cost"),
    ("0 1 1\n", "start: 0\n1: 1@0.5\n1: 2@0.1\n", "duplicate site line"),
])
def test_format_errors(graph_text, sites_text, message):
    with pytest.raises(InstanceFormatError, match=message):
        load_instance(graph_text, sites_text)


def test_comments_and_blank_lines_are_ignored():
    instance = load_instance("# edges\n\n0 1 2.0  # first\n", "# table\nstart: 0\n\n1: 3@0.5 # only tier\n")
    assert instance.n == 2
    assert instance.sites[1].total_prob == 0.5


def test_start_tiers_are_dropped_with_warning(caplog):
    with caplog.at_level(logging.WARNING):
        instance = load_instance("0 1 1\n", "start: 0\n0: 1@0.5\n1: 1@0.5\n")
    assert instance.sites[0].tiers == ()
    assert "Dropping 1 tiers at start vertex 0" in caplog.text


def test_sparse_ids_are_remapped_and_labelled():
    instance = load_instance("10 20 1\n20 30 2\n", "start: 20\n30: 1@0.5\n")
    assert instance.labels == (10, 20, 30)
    assert instance.start == 1
    walk = Walk.of(instance, [1, 2])
    assert walk.labelled(instance) == [20, 30]


def test_single_id_line_declares_isolated_vertex():
    instance = load_instance("0 1 1\n5\n", "start: 0\n5: 1@0.5\n")
    assert instance.n == 3
    assert instance.graph.degree(2) == 0


def test_write_then_reload_is_idempotent():
    original = load_instance("3 4 1.5\n4 9 2.25\n7\n", "start: 3\n4: 1@0.25, 2@0.5\n9: 0@0.1\n7: 4@1.0\n")
    graph_text, sites_text = write_instance(original)
    reloaded = load_instance(graph_text, sites_text)
    assert reloaded.labels == original.labels
    assert reloaded.sites == original.sites
    assert sorted(reloaded.graph.edges(data='weight')) == sorted(original.graph.edges(data='weight'))
    walk = Walk.of(original, [0, 1, 3])
    assert success_probability(reloaded, walk, 10.0) == success_probability(original, walk, 10.0)


def test_parse_sites_returns_declaring_lines():
    start, sites = parse_sites("start: 0\n\n2: 1@0.5\n")
    assert start == 0
    assert sites[2] == (3, [(1.0, 0.5)])


def test_write_dtsp_has_prize_and_deadline_columns():
    instance = load_instance("0 1 4\n", "start: 0\n1: 3@0.5\n")
    text = write_dtsp(to_deadline_tsp(to_single_cost(instance), 10.0))
    assert "root: 0" in text
    assert "1: prize=0.6931471805599453 deadline=7.0" in text


def test_load_key_value_experiment_config(tmp_path):
    path = tmp_path / "exp.env"
    path.write_text(
        "mode=min_budget\n"
        "solvers=greedy, optimal\n"
        "sweep_values=0.7,0.9\n"
        "instances_per_point=3\n"
        "n=8\n"
        "neighbors=2\n"
        "aco_iterations=5\n",
        encoding='utf-8',
    )
    config = load_experiment_config(path)
    assert config.solvers == ['greedy', 'optimal']
    assert config.sweep_values == [0.7, 0.9]
    assert config.instances_per_point == 3
    assert config.generator.n == 8
    assert config.aco.iterations == 5


def test_load_yaml_experiment_config(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text(
        "mode: max_probability\n"
        "sweep_parameter: budget\n"
        "sweep_values: [5, 10]\n"
        "solvers: [optimal, greedy]\n",
        encoding='utf-8',
    )
    config = load_experiment_config(path)
    assert config.mode == 'max_probability'
    assert config.sweep_values == [5.0, 10.0]


def test_unknown_config_key_is_rejected(tmp_path):
    path = tmp_path / "exp.env"
    path.write_text("colour=blue\n", encoding='utf-8')
    with pytest.raises(ValueError, match="unknown keys"):
        load_experiment_config(path)


def test_unknown_aco_key_is_rejected(tmp_path):
    path = tmp_path / "exp.env"
    path.write_text("aco_iterations=5\naco_ants=3\n", encoding='utf-8')
    with pytest.raises(ValueError, match="aco_ants"):
        load_experiment_config(path)
