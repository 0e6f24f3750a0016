"""Sequential ranking-and-selection runs and their aggregation.

Each replication estimates a prior from pilot samples, then repeatedly picks
an alternative by knowledge gradient, measures it, updates the belief and
records the opportunity cost of the current best guess.

Random streams are derived from the master seed with
:class:`numpy.random.SeedSequence` spawn keys:

* ``(0,)``                   problem construction (e.g. the LHS design)
* ``(1, rep)``               pilot samples, shared by every rule (common random numbers)
* ``(2, rule_code, rep)``    measurements made by one rule in one replication
"""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .belief import BeliefState, estimate_prior
from .errors import DimensionMismatch, NotPositiveDefinite
from .kg import select_alternative
from .problems import (
    BoreholeConfig,
    Problem,
    calibration_problem,
    load_empirical_csv,
    mvn_problem,
)
from .updates import SingleObservation, UpdateRule, apply

log = logging.getLogger(__name__)

RULE_CODES = {
    UpdateRule.FULL_CONJUGATE: 0,
    UpdateRule.KL: 1,
    UpdateRule.MOMENT: 2,
    UpdateRule.MOMENT_KL: 3,
}
_STREAM_PROBLEM, _STREAM_PILOT, _STREAM_RUN = 0, 1, 2


@dataclass(frozen=True)
class ProblemSpec:
    """Serializable description of a sampling environment."""

    kind: str = "mvn"
    k: int = 9
    rho: float = 0.5
    x7_levels: int = 10
    design_runs: int = 8
    data: str | None = None

    def build(self, rng: np.random.Generator) -> Problem:
        if self.kind == "mvn":
            return mvn_problem(self.k, self.rho)
        if self.kind == "borehole":
            return calibration_problem(BoreholeConfig(x7_levels=self.x7_levels,
                                                      design_runs=self.design_runs), rng)
        if self.kind == "empirical":
            if not self.data:
                raise ValueError("empirical problem needs a data path")
            return load_empirical_csv(self.data)
        raise ValueError(f"unknown problem kind {self.kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    rules: tuple[UpdateRule, ...] = (UpdateRule.KL, UpdateRule.MOMENT, UpdateRule.MOMENT_KL)
    steps: int = 1000
    replications: int = 100
    pilot_count: int = 25
    q0: float | None = None  # None -> pilot_count
    b0: float | None = None  # None -> K + 4
    ridge: float = 1e-6
    master_seed: int = 0
    threads: int = 1

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.pilot_count < 2:
            raise ValueError("pilot_count must be at least 2")
        if not self.rules:
            raise ValueError("need at least one rule")
        object.__setattr__(self, "rules", tuple(UpdateRule.parse(r) if isinstance(r, str) else r
                                                for r in self.rules))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rules"] = [r.value for r in self.rules]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["problem"] = ProblemSpec(**d["problem"])
        d["rules"] = tuple(UpdateRule.parse(r) for r in d["rules"])
        return cls(**d)


@dataclass
class Trajectory:
    rule: UpdateRule
    replication: int
    costs: np.ndarray
    aborted: bool = False
    message: str = ""


@dataclass
class RuleSummary:
    mean_cost: np.ndarray
    stderr: np.ndarray
    std: np.ndarray
    completed: int
    aborted: int


@dataclass
class ResultTable:
    steps: int
    summaries: dict[UpdateRule, RuleSummary]
    trajectories: list[Trajectory]
    partial: bool = False

    def final(self) -> dict[str, dict[str, float]]:
        """Last-step mean, standard error and standard deviation per rule."""
        out = {}
        for rule, s in self.summaries.items():
            out[rule.value] = {
                "mean_cost": float(s.mean_cost[-1]),
                "stderr": float(s.stderr[-1]),
                "std": float(s.std[-1]),
                "completed": s.completed,
                "aborted": s.aborted,
            }
        return out

    def aborted_count(self) -> int:
        return sum(s.aborted for s in self.summaries.values())


def opportunity_cost(true_means, theta) -> float:
    """Gap between the best true mean and the true mean of ``argmax theta``."""
    true_means = np.asarray(true_means, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if true_means.shape != theta.shape:
        raise DimensionMismatch("true means and belief means differ in length")
    return float(true_means.max() - true_means[int(np.argmax(theta))])


def _stream(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))


def draw_pilot(problem: Problem, n0: int, rng: np.random.Generator) -> np.ndarray:
    return np.vstack([problem.sample_all(rng) for _ in range(n0)])


def run_replication(problem: Problem, rule: UpdateRule, cfg: ExperimentConfig,
                    rng: np.random.Generator, pilot: np.ndarray | None = None,
                    replication: int = 0) -> Trajectory:
    """One sequential run of ``cfg.steps`` measurements under ``rule``.

    Pilot samples are drawn from ``rng`` unless supplied.  A loss of positive
    definiteness ends the run early with ``aborted=True``.
    """
    if pilot is None:
        pilot = draw_pilot(problem, cfg.pilot_count, rng)
    state: BeliefState = estimate_prior(pilot, b0=cfg.b0, q0=cfg.q0, ridge=cfg.ridge)
    means = problem.true_means
    best = means.max()
    costs = np.empty(cfg.steps)
    for n in range(cfg.steps):
        try:
            if rule is UpdateRule.FULL_CONJUGATE:
                state = apply(rule, state, problem.sample_all(rng))
            else:
                k = select_alternative(state, rule)
                y = problem.sample_one(k, rng)
                state = apply(rule, state, SingleObservation(k, y))
        except NotPositiveDefinite as exc:
            log.warning("replication %d (%s) aborted at step %d: %s", replication, rule.label, n + 1, exc)
            return Trajectory(rule, replication, costs[:n].copy(), aborted=True, message=str(exc))
        costs[n] = best - means[int(np.argmax(state.theta))]
    return Trajectory(rule, replication, costs)


def _job(args) -> Trajectory:
    problem, rule, cfg, rep = args
    pilot = draw_pilot(problem, cfg.pilot_count, _stream(cfg.master_seed, _STREAM_PILOT, rep))
    rng = _stream(cfg.master_seed, _STREAM_RUN, RULE_CODES[rule], rep)
    return run_replication(problem, rule, cfg, rng, pilot=pilot, replication=rep)


def build_problem(cfg: ExperimentConfig) -> Problem:
    return cfg.problem.build(_stream(cfg.master_seed, _STREAM_PROBLEM))


def aggregate(trajectories: Sequence[Trajectory], rules: Sequence[UpdateRule], steps: int) -> dict:
    summaries = {}
    for rule in rules:
        mine = [t for t in trajectories if t.rule is rule]
        done = [t.costs for t in mine if not t.aborted]
        if done:
            costs = np.vstack(done)
            mean = costs.mean(axis=0)
            std = costs.std(axis=0, ddof=1) if len(done) > 1 else np.zeros(steps)
        else:
            mean = np.full(steps, np.nan)
            std = np.full(steps, np.nan)
        summaries[rule] = RuleSummary(mean_cost=mean, stderr=std / np.sqrt(max(len(done), 1)),
                                      std=std, completed=len(done), aborted=len(mine) - len(done))
    return summaries


def resolve_threads(requested: int | None) -> int:
    env = os.environ.get("RS_ENGINE_THREADS")
    if env:
        return max(1, int(env))
    if requested is None or requested <= 0:
        return os.cpu_count() or 1
    return requested


def run_experiment(cfg: ExperimentConfig, problem: Problem | None = None) -> ResultTable:
    """All rules times all replications, aggregated per step.

    Output does not depend on ``cfg.threads`` or on the order of ``cfg.rules``.
    An interrupt returns whatever replications finished, flagged ``partial``.
    """
    if problem is None:
        problem = build_problem(cfg)
    jobs = [(problem, rule, cfg, rep) for rule in cfg.rules for rep in range(cfg.replications)]
    trajectories: list[Trajectory] = []
    partial = False
    threads = resolve_threads(cfg.threads)
    try:
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                for traj in pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * threads))):
                    trajectories.append(traj)
        else:
            for job in jobs:
                trajectories.append(_job(job))
    except KeyboardInterrupt:
        log.warning("interrupted after %d of %d replications", len(trajectories), len(jobs))
        partial = True
    summaries = aggregate(trajectories, cfg.rules, cfg.steps)
    return ResultTable(steps=cfg.steps, summaries=summaries, trajectories=trajectories, partial=partial)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

AGGREGATE_HEADER = ("rule", "step", "mean_cost", "stderr")
RAW_HEADER = ("rule", "replication", "step", "cost")


def _fmt(x: float) -> str:
    return repr(float(x))


def aggregate_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGGREGATE_HEADER)
    for rule, s in table.summaries.items():
        for n in range(table.steps):
            w.writerow((rule.value, n + 1, _fmt(s.mean_cost[n]), _fmt(s.stderr[n])))
    return buf.getvalue()


def raw_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RAW_HEADER)
    for t in table.trajectories:
        for n, c in enumerate(t.costs):
            w.writerow((t.rule.value, t.replication, n + 1, _fmt(c)))
    return buf.getvalue()


def read_raw_csv(path: str | Path, steps: int) -> list[Trajectory]:
    """Rebuild trajectories from a raw dump; runs shorter than ``steps`` were aborted."""
    by_key: dict[tuple[str, int], list[tuple[int, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (row["rule"], int(row["replication"]))
            by_key.setdefault(key, []).append((int(row["step"]), float(row["cost"])))
    out = []
    for (rule, rep), items in by_key.items():
        items.sort()
        costs = np.array([c for _, c in items])
        out.append(Trajectory(UpdateRule.parse(rule), rep, costs, aborted=costs.size < steps))
    return out
