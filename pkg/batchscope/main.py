import argparse
import logging
import sys
from typing import Optional, Sequence

from batchscope.commands import analyze, export, report, run
from batchscope.config import settings
from batchscope.core.exceptions import EXIT_CONFIG_ERROR, handle_error

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="batchscope",
        description="Explainability metrics for batch surrogate optimization",
    )
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper,
                        help=f"Logging verbosity (default {settings.log_level})")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (run, analyze, report, export):
        command.register(subparsers)
    return parser


def configure_logging(level: Optional[str]) -> None:
    logging.basicConfig(level=level or settings.log_level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors count as config errors; --help exits 0
        return EXIT_CONFIG_ERROR if exc.code else 0
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except Exception as exc:
        return handle_error(exc)


if __name__ == "__main__":
    raise SystemExit(main())
