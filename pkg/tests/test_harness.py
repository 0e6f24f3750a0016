import numpy as np
import pytest

from niwrs.errors import DimensionMismatch
from niwrs.harness import (
    ExperimentConfig,
    ProblemSpec,
    _job,
    _stream,
    aggregate,
    aggregate_csv,
    build_problem,
    draw_pilot,
    opportunity_cost,
    raw_csv,
    read_raw_csv,
    resolve_threads,
    run_experiment,
    run_replication,
)
from niwrs.problems import mvn_problem
from niwrs.updates import UpdateRule

SMALL = ExperimentConfig(problem=ProblemSpec(kind="mvn", k=4, rho=0.5), steps=30, replications=4,
                         pilot_count=6, master_seed=11)


def test_opportunity_cost():
    assert opportunity_cost([1, 2, 3], [0.0, 5.0, 1.0]) == 1.0
    assert opportunity_cost([1, 2, 3], [0.0, 0.0, 9.0]) == 0.0
    with pytest.raises(DimensionMismatch):
        opportunity_cost([1, 2], [1, 2, 3])


def test_config_round_trip():
    d = SMALL.to_dict()
    assert d["rules"] == ["kl", "moment", "moment-kl"]
    assert ExperimentConfig.from_dict(d) == SMALL


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(steps=0)
    with pytest.raises(ValueError):
        ExperimentConfig(rules=())


def test_run_is_deterministic():
    a = aggregate_csv(run_experiment(SMALL))
    b = aggregate_csv(run_experiment(SMALL))
    assert a == b


def test_rule_order_does_not_matter():
    t1 = run_experiment(SMALL)
    t2 = run_experiment(ExperimentConfig(**{**SMALL.__dict__, "rules": tuple(reversed(SMALL.rules))}))
    for rule in SMALL.rules:
        np.testing.assert_array_equal(t1.summaries[rule].mean_cost, t2.summaries[rule].mean_cost)


def test_threads_do_not_change_results():
    cfg = ExperimentConfig(**{**SMALL.__dict__, "threads": 2})
    assert aggregate_csv(run_experiment(cfg)) == aggregate_csv(run_experiment(SMALL))


def test_common_pilot_across_rules():
    problem = build_problem(SMALL)
    a = draw_pilot(problem, SMALL.pilot_count, _stream(SMALL.master_seed, 1, 2))
    b = draw_pilot(problem, SMALL.pilot_count, _stream(SMALL.master_seed, 1, 2))
    np.testing.assert_array_equal(a, b)
    c = draw_pilot(problem, SMALL.pilot_count, _stream(SMALL.master_seed, 1, 3))
    assert not np.array_equal(a, c)


def test_replication_costs_nonnegative():
    problem = build_problem(SMALL)
    for rule in SMALL.rules:
        t = _job((problem, rule, SMALL, 0))
        assert t.costs.shape == (SMALL.steps,) and not t.aborted
        assert np.all(t.costs >= 0)


def test_full_rule_runs():
    cfg = ExperimentConfig(**{**SMALL.__dict__, "rules": (UpdateRule.FULL_CONJUGATE,)})
    table = run_experiment(cfg)
    assert table.summaries[UpdateRule.FULL_CONJUGATE].completed == cfg.replications


def test_aggregation_from_raw(tmp_path):
    table = run_experiment(SMALL)
    path = tmp_path / "raw.csv"
    path.write_text(raw_csv(table))
    trajs = read_raw_csv(path, SMALL.steps)
    again = aggregate(trajs, SMALL.rules, SMALL.steps)
    for rule in SMALL.rules:
        costs = np.vstack([t.costs for t in trajs if t.rule is rule])
        np.testing.assert_allclose(again[rule].mean_cost, costs.mean(axis=0), rtol=1e-15)
        np.testing.assert_allclose(again[rule].stderr, costs.std(axis=0, ddof=1) / np.sqrt(len(costs)))
        np.testing.assert_array_equal(again[rule].mean_cost, table.summaries[rule].mean_cost)
        assert np.all(again[rule].stderr >= 0)


def test_single_replication_has_zero_stderr():
    cfg = ExperimentConfig(**{**SMALL.__dict__, "replications": 1})
    for s in run_experiment(cfg).summaries.values():
        np.testing.assert_array_equal(s.stderr, 0.0)


def test_aborted_runs_excluded(tmp_path):
    path = tmp_path / "raw.csv"
    path.write_text("rule,replication,step,cost\nkl,0,1,0.5\nkl,0,2,0.25\nkl,1,1,1.0\n")
    trajs = read_raw_csv(path, steps=2)
    summ = aggregate(trajs, [UpdateRule.KL], 2)[UpdateRule.KL]
    assert summ.completed == 1 and summ.aborted == 1
    np.testing.assert_array_equal(summ.mean_cost, [0.5, 0.25])


def test_aggregate_csv_layout():
    text = aggregate_csv(run_experiment(SMALL)).splitlines()
    assert text[0] == "rule,step,mean_cost,stderr"
    assert len(text) == 1 + len(SMALL.rules) * SMALL.steps
    assert text[1].startswith("kl,1,")


def test_easy_instance_finds_best():
    """Two far-apart alternatives: every run ends on the better one."""
    problem = mvn_problem(2, 0.0)
    problem.true_means = np.array([0.0, 3.0])
    cfg = ExperimentConfig(problem=ProblemSpec(kind="mvn", k=2, rho=0.0), steps=50, replications=100,
                           pilot_count=5, master_seed=3)
    table = run_experiment(cfg, problem=problem)
    for rule in cfg.rules:
        finals = [t.costs[-1] for t in table.trajectories if t.rule is rule]
        assert sum(c == 0.0 for c in finals) >= 95


def test_resolve_threads(monkeypatch):
    monkeypatch.delenv("RS_ENGINE_THREADS", raising=False)
    assert resolve_threads(3) == 3
    assert resolve_threads(0) >= 1
    monkeypatch.setenv("RS_ENGINE_THREADS", "2")
    assert resolve_threads(5) == 2


def test_run_replication_draws_own_pilot():
    problem = mvn_problem(3, 0.2)
    cfg = ExperimentConfig(problem=ProblemSpec(k=3, rho=0.2), steps=5, replications=1, pilot_count=4)
    t = run_replication(problem, UpdateRule.MOMENT, cfg, np.random.default_rng(0))
    assert t.costs.shape == (5,)
