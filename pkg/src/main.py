"""
ProSite Workbench - command line entry point

    prosite check <site-file | fixture> --suite all --seed 42 --budget 6 --out reports/bg2.report
    prosite replay <report> [--budget N]
    prosite fixtures list
"""
import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from loguru import logger

from src.config.settings import get_settings
from src.core.errors import WorkbenchError
from src.core.logging import setup_logging
from src.services.workbench import catalog, workbench_service
from src.services.workbench.registry import ALL, SUITES

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _site_path(name: str) -> Path:
    """A site file path, or the name of a shipped fixture."""
    path = Path(name)
    return path if path.is_file() else catalog.fixture_path(name)


def cmd_check(args: argparse.Namespace) -> int:
    report = workbench_service.run_suite(_site_path(args.site), args.suite, args.seed, args.budget)
    if args.witnesses:
        workbench_service.write_witnesses(report, args.witnesses)
    if args.out:
        workbench_service.write_report(report, args.out)
    else:
        sys.stdout.write(report.render())
    return report.exit_code


def cmd_replay(args: argparse.Namespace) -> int:
    result = workbench_service.replay(args.report, args.budget)
    sys.stdout.write(result.rerun.render())
    for line in result.differences:
        sys.stdout.write(f"# {result.mode}-difference: {line}\n")
    if result.mode == "replay" and not result.identical:
        return EXIT_ERROR
    return result.rerun.exit_code


def cmd_fixtures(args: argparse.Namespace) -> int:
    for entry in catalog.list_fixtures(args.dir):
        order = "-" if entry.group_order is None else str(entry.group_order)
        sys.stdout.write(
            f"{entry.name:<8} {entry.file:<10} |G|={order:<2} objects={entry.objects:<3} "
            f"beta_hint={entry.beta_hint:<4} {entry.description}\n"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="prosite", description=settings.APP_NAME)
    parser.add_argument("--log-level", default=None, help="loguru level, default from WORKBENCH_LOG_LEVEL")
    parser.add_argument("--log-json", action="store_true", default=None, help="serialize log records as JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="run a suite over a site file")
    check.add_argument("site", help="site file path or fixture name")
    check.add_argument("--suite", default=ALL, choices=SUITES + (ALL,))
    check.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    check.add_argument("--budget", type=int, default=settings.DEFAULT_BUDGET)
    check.add_argument("--out", default=None, help="report path; stdout when omitted")
    check.add_argument("--witnesses", default=None, help="JSON-lines witness sidecar path")
    check.set_defaults(handler=cmd_check)

    rerun = sub.add_parser("replay", help="rerun a stored report and compare its CHECK lines")
    rerun.add_argument("report")
    rerun.add_argument("--budget", type=int, default=None, help="a raised budget makes a non-replay comparison")
    rerun.set_defaults(handler=cmd_replay)

    fixtures = sub.add_parser("fixtures", help="shipped fixtures")
    fixtures.add_argument("action", choices=("list",))
    fixtures.add_argument("--dir", default=None, help=f"fixture directory, default {settings.FIXTURE_DIR}")
    fixtures.set_defaults(handler=cmd_fixtures)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(list(argv) if argv is not None else None)
    setup_logging(args.log_level, args.log_json)
    try:
        return args.handler(args)
    except WorkbenchError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
