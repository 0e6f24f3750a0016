"""Command-line entry point: ``niwrs run|verify|describe``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .harness import (
    ExperimentConfig,
    ProblemSpec,
    aggregate_csv,
    build_problem,
    raw_csv,
    run_experiment,
)
from .updates import UpdateRule

log = logging.getLogger("niwrs")


def _rho(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0 <= v < 1:
        raise argparse.ArgumentTypeError(f"rho must lie in [0, 1), got {v}")
    return v


def _positive_int(minimum: int):
    def parse(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
        if v < minimum:
            raise argparse.ArgumentTypeError(f"must be at least {minimum}, got {v}")
        return v
    return parse


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _rules(text: str) -> tuple[UpdateRule, ...]:
    try:
        rules = tuple(UpdateRule.parse(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    if not rules:
        raise argparse.ArgumentTypeError("no rules given")
    if len(set(rules)) != len(rules):
        raise argparse.ArgumentTypeError("rules repeated")
    return rules


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("problem")
    g.add_argument("--problem", choices=("mvn", "borehole", "empirical"), default="mvn")
    g.add_argument("--k", type=_positive_int(2), default=9, help="alternatives (mvn)")
    g.add_argument("--rho", type=_rho, default=0.5, help="correlation strength in [0, 1) (mvn)")
    g.add_argument("--x7-levels", type=int, choices=(10, 17), default=10, help="borehole x7 levels")
    g.add_argument("--design-runs", type=_positive_int(1), default=8, help="borehole LHS runs")
    g.add_argument("--data", help="CSV of joint observations (empirical)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="niwrs", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write CSV results")
    _add_problem_flags(run)
    run.add_argument("--rules", type=_rules, default=_rules("kl,moment,moment-kl"))
    run.add_argument("--steps", type=_positive_int(1), default=1000)
    run.add_argument("--reps", type=_positive_int(1), default=100)
    run.add_argument("--pilot", type=_positive_int(2), default=25)
    run.add_argument("--q0", type=_positive_float, default=None, help="default: --pilot")
    run.add_argument("--b0", type=_positive_float, default=None, help="default: K + 4")
    run.add_argument("--ridge", type=float, default=1e-6)
    run.add_argument("--seed", type=_positive_int(0), default=0)
    run.add_argument("--threads", type=int, default=0, help="worker processes (0: all cores)")
    run.add_argument("--manifest", help="rerun the configuration stored in a manifest")
    run.add_argument("--out", required=True, help="aggregate CSV path")
    run.add_argument("--raw", help="optional per-replication CSV path")
    run.add_argument("--figure", action="store_true", help="also write <out>.png")

    verify = sub.add_parser("verify", help="run the Monte Carlo oracle checks")
    verify.add_argument("--draws", type=_positive_int(1000), default=100_000)
    verify.add_argument("--seed", type=_positive_int(0), default=1)

    describe = sub.add_parser("describe", help="print a problem's alternatives and true means")
    _add_problem_flags(describe)
    describe.add_argument("--seed", type=_positive_int(0), default=0)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "problem", None) == "empirical" and not args.data and not getattr(args, "manifest", None):
        parser.error("argument --data: required when --problem empirical")
    if args.command == "run" and args.ridge < 0:
        parser.error("argument --ridge: must be nonnegative")
    return args


def _problem_spec(args) -> ProblemSpec:
    data = str(Path(args.data).resolve()) if args.data else None
    return ProblemSpec(kind=args.problem, k=args.k, rho=args.rho, x7_levels=args.x7_levels,
                       design_runs=args.design_runs, data=data)


def manifest_path(out: Path) -> Path:
    return out.with_name(out.stem + ".manifest.json")


def config_from_args(args) -> ExperimentConfig:
    if args.manifest:
        with open(args.manifest, encoding="utf-8") as fh:
            return ExperimentConfig.from_dict(json.load(fh)["config"])
    return ExperimentConfig(problem=_problem_spec(args), rules=args.rules, steps=args.steps,
                            replications=args.reps, pilot_count=args.pilot, q0=args.q0, b0=args.b0,
                            ridge=args.ridge, master_seed=args.seed, threads=args.threads)


def _check_writable(path: Path) -> None:
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OSError(f"cannot write to {path}")
    if path.is_dir():
        raise OSError(f"cannot write to {path}: is a directory")


def cmd_run(args) -> int:
    cfg = config_from_args(args)
    out = Path(args.out)
    targets = [out, manifest_path(out)] + ([Path(args.raw)] if args.raw else [])
    for t in targets:
        _check_writable(t)
    table = run_experiment(cfg)
    out.write_text(aggregate_csv(table), encoding="utf-8")
    if args.raw:
        Path(args.raw).write_text(raw_csv(table), encoding="utf-8")
    manifest = {
        "version": __version__,
        "config": cfg.to_dict(),
        "seeds": {
            "master_seed": cfg.master_seed,
            "derivation": "numpy SeedSequence(master_seed, spawn_key=key); "
                          "problem (0,), pilot (1, rep), run (2, rule_code, rep)",
        },
        "aborted_replications": table.aborted_count(),
        "partial": table.partial,
        "final": table.final(),
        "outputs": {"aggregate": out.name, "raw": Path(args.raw).name if args.raw else None},
    }
    manifest_path(out).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if args.figure:
        from .plotting import plot_opportunity_cost
        plot_opportunity_cost(table, out.with_suffix(".png"), title=f"{cfg.problem.kind}")
    for rule, row in table.final().items():
        print(f"{rule:10s} final mean cost {row['mean_cost']:.4f}  (se {row['stderr']:.4f}, "
              f"{row['completed']} runs, {row['aborted']} aborted)")
    return 130 if table.partial else 0


def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all(draws=args.draws, seed=args.seed)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def cmd_describe(args) -> int:
    spec = _problem_spec(args)
    problem = spec.build(np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(0,))))
    np.set_printoptions(precision=6, suppress=True, linewidth=100)
    print(f"problem: {spec.kind}")
    print(f"K: {problem.K}")
    print("true means:")
    for label, m in zip(problem.labels, problem.true_means):
        print(f"  {label}: {m:.6f}")
    print(f"best: {problem.labels[int(np.argmax(problem.true_means))]}")
    cov = getattr(problem, "covariance", None)
    if cov is not None:
        print("covariance:")
        print(cov)
    return 0


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": cmd_run, "verify": cmd_verify, "describe": cmd_describe}
    try:
        return handlers[args.command](args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
