"""Command line entry point.

Exit codes: 0 success, 1 engine error, 2 usage, 3 scenario error,
4 I/O error, 5 client command rejected.
"""

from __future__ import annotations

import argparse
import sys

from .errors import PowerError, ScenarioError
from .harness import (SHIPPED, Comparison, compare_levels, emit_report, load_result,
                      load_scenario, render, run_experiment)
from .protocol import handle_line
from .scheduler import Engine

EXIT_ENGINE, EXIT_SCENARIO, EXIT_IO, EXIT_REJECTED = 1, 3, 4, 5


def _scenario_arg(args, default=None):
    path = getattr(args, "scenario_pos", None) or args.scenario or default
    if path is None:
        raise ScenarioError("no scenario given (positional or --scenario)")
    return load_scenario(path)


def _output(text: str, result, args) -> None:
    if args.out:
        emit_report(result, args.format, args.out)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    scenario = _scenario_arg(args)
    result = run_experiment(scenario, duration_hours=args.duration_hours)
    if not args.out:
        print(f"{result.device} {result.config}: consumed {result.consumed:.3f} mAh, "
              f"remaining {result.remaining_fraction:.2f}%")
        if args.format == "csv":
            sys.stdout.write(render(result, "csv"))
        for e in result.event_log:
            print(e.line())
    else:
        emit_report(result, args.format, args.out)
    return 0


def cmd_compare(args) -> int:
    names = list(args.scenario_pos or [])
    if args.scenario:
        names.append(args.scenario)
    table = Comparison()
    for name in names or SHIPPED:
        table = table + compare_levels(load_scenario(name), duration_hours=args.duration_hours)
    _output(render(table, args.format), table, args)
    return 0


def cmd_client(args) -> int:
    scenario = _scenario_arg(args, default="dual_core_phone")
    engine = Engine(scenario.profile, scenario.sources, start=scenario.start,
                    state_path=args.state, lead_minutes=scenario.lead_minutes)
    rejected = False
    for line in args.line:
        reply = handle_line(line, engine)
        print(reply)
        rejected |= reply.startswith("ERR")
    return EXIT_REJECTED if rejected else 0


def cmd_report(args) -> int:
    result = load_result(args.result)
    _output(render(result, args.format), result, args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="idlepower", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, nargs="?"):
        p.add_argument("scenario_pos", nargs=nargs, metavar="scenario",
                       help="scenario file or shipped name (%s)" % ", ".join(SHIPPED))
        p.add_argument("--scenario", help="scenario file or shipped name")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("csv", "text"), default="csv")
        p.add_argument("--duration-hours", type=float, default=None)

    p = sub.add_parser("run", help="run one scenario")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="before vs the three sleep levels")
    common(p, nargs="*")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("client", help="send protocol lines to a scenario-initialized engine")
    p.add_argument("line", nargs="+", help="command line, e.g. 'STATUS'")
    p.add_argument("--scenario", help="scenario file or shipped name (default dual_core_phone)")
    p.add_argument("--state", help="engine state file; kept across invocations")
    p.set_defaults(func=cmd_client)

    p = sub.add_parser("report", help="re-render a saved text (JSON) result")
    p.add_argument("result")
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as err:
        print(f"error: {err.code}: {err}", file=sys.stderr)
        return EXIT_SCENARIO
    except PowerError as err:
        print(f"error: {err.code}: {err}", file=sys.stderr)
        return EXIT_ENGINE
    except (OSError, ValueError) as err:
        # unreadable or malformed result files land here too
        print(f"error: io-error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
