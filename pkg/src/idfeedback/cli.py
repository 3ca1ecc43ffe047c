"""Command-line entry point.

Exit codes: 0 on success, 1 if any checked property was violated, 2 on a
usage error (bad flags, malformed adversary spec, out-of-range parameters).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from idfeedback import rates
from idfeedback.analysis import check_propositions, read_trajectory_csv, violations_json
from idfeedback.harness import ExperimentConfig, run_experiment, run_fuzz, session_trajectory_csv
from idfeedback.insdel import check_reduction
from idfeedback.partition import DEFAULT_PRECISION, ParameterError, make_params

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _add_session_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; flags given explicitly override it")
    p.add_argument("--channel", choices=("subst", "id"))
    p.add_argument("--m-bits", type=int)
    p.add_argument("--m-count", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--adversary", help="e.g. none, fixed:16,21,22, greedy:budget=5, random:p=0.3")
    p.add_argument("--seed", type=int)
    p.add_argument("--precision", type=int, help=f"mantissa bits (default {DEFAULT_PRECISION})")


def _config(args) -> ExperimentConfig:
    base = ExperimentConfig.from_text(Path(args.config).read_text()) if args.config else ExperimentConfig()
    kw = {k: v for k, v in vars(base).items()}
    for key in ("channel", "m_bits", "m_count", "n", "tau", "epsilon", "alpha", "adversary", "seed",
                "precision", "trials", "report", "trajectory"):
        value = getattr(args, key, None)
        if value is not None:
            kw[key] = value
    if args.m_bits is not None:
        kw["m_count"] = None
    elif args.m_count is not None:
        kw["m_bits"] = None
    return ExperimentConfig(**kw)


def cmd_simulate(args) -> int:
    config = _config(args)
    if args.save_config:
        Path(args.save_config).write_text(config.to_text())
    report = run_experiment(config, workers=args.workers)
    _write(config.report, report.to_json(timing=args.timing))
    if config.trajectory:
        Path(config.trajectory).write_text(session_trajectory_csv(config))
    if config.report not in (None, "-"):
        print(f"trials={len(report.trials)} success_rate={report.success_rate:.4f} "
              f"violations={report.violation_count} wall_clock={report.wall_clock:.3f}s")
    if report.violation_count:
        return EXIT_VIOLATION
    if args.require_success and report.success_rate < 1.0:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_trajectory(args) -> int:
    config = _config(args)
    text = session_trajectory_csv(config, args.trial)
    _write(args.out, text)
    return EXIT_OK


def cmd_rate_curve(args) -> int:
    table = rates.rate_curve(args.which, args.step)
    _write(args.out, table.to_json() + "\n" if args.json else table.to_text())
    return EXIT_OK


def cmd_fuzz(args) -> int:
    report = run_fuzz(args.trials, args.seed, args.precision, args.workers)
    if args.out:
        Path(args.out).write_text(report.to_json())
    print(f"trials={report.trials} seed={report.seed} violations={report.violation_count} "
          f"wall_clock={report.wall_clock:.1f}s")
    for case, v in report.failures[:20]:
        print(f"  trial {case.trial} ({case.kind}, M={case.m_count}, n={case.n}): step {v.step} "
              f"{v.proposition_id} lhs={v.lhs[:24]} rhs={v.rhs[:24]}")
    return EXIT_VIOLATION if report.violation_count else EXIT_OK


def cmd_reduce(args) -> int:
    bad = 0
    checked = gated = 0
    for m_count in range(2, args.max_m + 1):
        for n in range(1, args.max_n + 1):
            for t in range(args.max_t + 1):
                rep = check_reduction(m_count, n, t, precision=args.precision)
                checked += 1
                gated += rep.inner_corrects
                if not rep.ok:
                    bad += 1
                    print(f"  M={m_count} n={n} t={t}: budget={rep.budget_violations} "
                          f"retransmission={rep.retransmission_violations} decode={rep.decode_failures}")
    print(f"checked={checked} inner_code_correcting={gated} failures={bad}")
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_props_check(args) -> int:
    text = Path(args.csv).read_text()
    _, records = read_trajectory_csv(text, args.precision)
    params = make_params(args.alpha, 1, len(records), precision=args.precision)
    violations = check_propositions(records, params)
    _write(args.out, violations_json(violations) + "\n")
    return EXIT_VIOLATION if violations else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="idfeedback", description="Feedback codes for adversarial substitution "
                                                    "and insertion-deletion channels")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate", help="run seeded sessions and write a JSON report")
    _add_session_flags(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--report", help="report path (default stdout)")
    p.add_argument("--trajectory", help="also write the trial-0 trajectory CSV here")
    p.add_argument("--save-config", help="write the effective config as key=value")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    p.add_argument("--require-success", action="store_true", help="exit 1 if any trial decodes wrongly")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("trajectory", help="write the trajectory CSV of one session")
    _add_session_flags(p)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("rate-curve", help="tabulate a rate curve")
    p.add_argument("--which", choices=("s", "id"), required=True)
    p.add_argument("--step", type=float, default=0.001)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_rate_curve)

    p = sub.add_parser("fuzz-props", help="check the step inequalities on random trajectories")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", type=int, default=DEFAULT_PRECISION)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("reduce-demo", help="exhaustive check of the retransmission wrapper")
    p.add_argument("--max-m", type=int, default=16)
    p.add_argument("--max-n", type=int, default=10)
    p.add_argument("--max-t", type=int, default=2)
    p.add_argument("--precision", type=int, default=DEFAULT_PRECISION)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("props-check", help="re-check the step inequalities on a trajectory CSV")
    p.add_argument("csv")
    p.add_argument("--alpha", type=float, required=True, help="the CSV does not record alpha")
    p.add_argument("--precision", type=int, default=DEFAULT_PRECISION)
    p.add_argument("--out", help="violations JSON path (default stdout)")
    p.set_defaults(func=cmd_props_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"idfeedback: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, rates.DomainError, FileNotFoundError) as exc:
        print(f"idfeedback: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
