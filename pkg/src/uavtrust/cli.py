"""Command line entry point: ``uavtrust run|list-scenarios|validate``.

Exit status: 0 on success, 1 on usage or validation errors, 2 on runtime errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from uavtrust import kernels
from uavtrust.output import emit_outputs
from uavtrust.scenario import (
    BUNDLED,
    ScenarioError,
    bundled_scenario_path,
    load_scenario,
    resolve_scenario,
    run_monte_carlo,
    run_replication,
)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uavtrust", description="UAV fleet trust-monitoring simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="log detector ambiguities")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    run = sub.add_parser("run", help="run a scenario's Monte Carlo replications")
    run.add_argument("scenario", help="scenario file or bundled scenario name")
    run.add_argument("--seed", type=int, help="override the scenario's base seed")
    run.add_argument("--reps", type=int, help="override the number of replications")
    run.add_argument("--out", type=Path, help="output directory (default: runs/<scenario>)")
    run.add_argument("--workers", type=int, default=1, help="worker processes (default: 1)")

    sub.add_parser("list-scenarios", help="list bundled scenarios")

    val = sub.add_parser("validate", help="check a scenario file")
    val.add_argument("scenario", help="scenario file or bundled scenario name")
    return parser


def _cmd_run(args) -> int:
    spec = resolve_scenario(args.scenario)
    if args.seed is not None:
        spec.base_seed = args.seed
    if args.reps is not None:
        if args.reps < 1:
            print("error: --reps must be >= 1", file=sys.stderr)
            return EXIT_INVALID
        spec.replications = args.reps
    out = args.out or Path("runs") / spec.name
    try:
        report = run_monte_carlo(spec, workers=max(1, args.workers))
        first = run_replication(spec, 0)
        paths = emit_outputs(out, report, first, spec)
    except ScenarioError:
        raise
    except Exception as exc:  # simulation or I/O failure
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    env = report.environmental_accuracy
    print(f"scenario        {spec.name} ({report.replications} replications, seed {spec.base_seed}, "
          f"{kernels.BACKEND} kernel)")
    print(f"detection_rate  {report.detection_rate:.3f}")
    print(f"false_alarm     {report.false_alarm_rate:.3f}")
    print(f"environmental   {'n/a' if env is None else format(env, '.3f')}")
    for p in paths.values():
        print(f"wrote {p}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_INVALID
    try:
        if args.command == "list-scenarios":
            for name in BUNDLED:
                spec = load_scenario(bundled_scenario_path(name))
                print(f"{name:16s} {spec.description}")
            return EXIT_OK
        if args.command == "validate":
            spec = resolve_scenario(args.scenario)
            print(f"ok: {spec.name}")
            return EXIT_OK
        return _cmd_run(args)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
