"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys

from .errors import ConfigurationError, InvalidStateError, NotPurifiableError, NumericalError
from .experiment.config import KINDS, describe_schema, load_config
from .experiment.records import emit
from .experiment.runners import RECIPES, recipe_config, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
_FORMATS = {"csv": ["csv"], "json": ["json"], "both": ["csv", "json"]}


def _common(default=None):
    # subcommands use SUPPRESS so they do not reset flags given before the subcommand
    p = argparse.ArgumentParser(add_help=False, argument_default=default)
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--seed", type=int, help="master seed (overrides run.master_seed)")
    p.add_argument("--jobs", type=int, help="worker processes for sweep points")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=sorted(_FORMATS), help="output format")
    return p


def build_parser():
    common = _common(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(
        prog="qlink", parents=[_common()], formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Simulate inter-core links for spin-qubit chips and emit plot-ready data.",
        epilog="Config keys and defaults (override with QLINK_<SECTION>_<KEY>):\n\n" + describe_schema())
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sub.add_parser(kind, parents=[common], help=f"run the {kind} experiment")
    run = sub.add_parser("run", parents=[common], help="run the experiment kind named in a config file")
    run.add_argument("config_path", help="TOML config file")
    sub.add_parser("validate", parents=[common], help="run the fast invariant checks")
    rep = sub.add_parser("repro", parents=[common], help="one-shot reproduction recipe")
    rep.add_argument("target", choices=sorted(RECIPES))
    return parser


def _overrides(args, kind=None):
    run = {}
    if kind:
        run["kind"] = kind
    if args.seed is not None:
        run["master_seed"] = args.seed
    if args.jobs is not None:
        run["jobs"] = args.jobs
    if args.out is not None:
        run["out"] = args.out
    if args.format is not None:
        run["formats"] = _FORMATS[args.format]
    return {"run": run}


def _run_validate():
    from .experiment.validate import run_checks

    results = run_checks()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_NUMERICAL


def _report(rec, paths):
    print(f"{rec.experiment_id}  config {rec.config_hash}  {rec.duration:.1f} s")
    for k, v in sorted(rec.metrics.items()):
        print(f"  {k} = {v:.6g}" if isinstance(v, float) else f"  {k} = {v}")
    for p in paths:
        print(f"  wrote {p}")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            return _run_validate()
        if args.command == "repro":
            cfg = recipe_config(args.target, args.config, extra=_overrides(args))
        elif args.command == "run":
            cfg = load_config(args.config_path, overrides=_overrides(args))
        else:
            cfg = load_config(args.config, overrides=_overrides(args, args.command))
        rec = run_experiment(cfg)
        _report(rec, emit(rec, cfg.out, cfg.formats))
        return EXIT_OK
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, InvalidStateError, NotPurifiableError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
