"""Command line entry point: ``opshift <command> [options]``."""

from __future__ import annotations

import argparse
import json
import sys

from .harness.config import ConfigError, ExperimentConfig, load_config
from .harness.report import EXIT_CONFIG, ReportError, checks_csv, emit_report, exit_code
from .harness.suite import run_suite

FIRST_ORDER = ("pathperturb", "ftc", "chain", "pdest", "tf", "mutau", "min", "connection1", "m2v-i", "arem1", "con", "realweights", "support")
SECOND_ORDER = ("pathperturb", "hij1", "remr2", "pd2est", "tf2", "nutau", "nin", "connection2", "m2v-ii", "arem2", "con2", "realweights", "support")
DILATION = ("dilfla", "vNineq")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment configuration")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--out", help="output directory (default: print to stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--mode", help="override the instance mode")
    p.add_argument("--trials", type=int, help="override the number of trials")
    p.add_argument("--n", type=int, help="override the tuple arity")
    p.add_argument("--dim", type=int, help="override the matrix dimension")
    p.add_argument("--threads", type=int, help="worker threads (default: OPSHIFT_THREADS or CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opshift", description="Numerical checks of multivariate operator trace formulas.")
    sub = parser.add_subparsers(dest="command", required=True)
    verify = sub.add_parser("verify", help="first- or second-order trace formula checks")
    vsub = verify.add_subparsers(dest="order", required=True)
    for name in ("first-order", "second-order"):
        _common(vsub.add_parser(name))
    _common(sub.add_parser("counterexample", help="the fixed two-variable counterexample"))
    _common(sub.add_parser("dilation", help="unitary dilations and the von Neumann inequality"))
    _common(sub.add_parser("suite", help="every check on every instance kind"))
    return parser


def _restrict(cfg: ExperimentConfig, preset) -> ExperimentConfig:
    chosen = tuple(a for a in preset if cfg.checks is None or a in cfg.checks)
    return cfg.with_overrides(checks=chosen)


def configure(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.command == "suite" and args.config is None and args.mode is None:
        cfg = cfg.with_overrides(mode="full")
    if args.command == "counterexample":
        cfg = cfg.with_overrides(mode="counterexample")
    elif args.command == "dilation":
        cfg = _restrict(cfg.with_overrides(mode=args.mode or "single_contraction"), DILATION)
    elif args.command == "verify":
        cfg = _restrict(cfg, FIRST_ORDER if args.order == "first-order" else SECOND_ORDER)
    cfg = cfg.with_overrides(seed=args.seed, trials=args.trials, n=args.n, dim=args.dim)
    if args.command not in ("counterexample", "dilation"):
        cfg = cfg.with_overrides(mode=args.mode)
    if cfg.checks is not None and not cfg.checks:
        raise ConfigError("empty check list")
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = configure(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = run_suite(cfg, threads=args.threads)
    try:
        report, written = emit_report(result, args.out, args.format)
    except ReportError as exc:
        print(f"report error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out is None:
        sys.stdout.write(json.dumps(report, indent=2) + "\n" if args.format == "json" else checks_csv(report))
    for c in report["checks"]:
        if not c["pass"]:
            print(f"FAIL {c['anchor']}: {c['check_name']} [{c['group']}] residual={c['residual']} {c['detail']}", file=sys.stderr)
    s = report["meta"]["summary"]
    print(f"{s['checks'] - s['failed']}/{s['checks']} checks passed" + "".join(f"\nwrote {p}" for p in written), file=sys.stderr)
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
