import argparse

from batchscope.core.exceptions import EXIT_OK, BatchScopeError, handle_error
from batchscope.services.report_service import export


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("export", help="Write a trace's evaluations as an iter,x1..xd,y CSV")
    parser.add_argument("trace", help="A run_<id>.jsonl trace")
    parser.add_argument("csv", help="Destination CSV")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    try:
        path = export(args.trace, args.csv)
    except BatchScopeError as exc:
        return handle_error(exc)
    print(path)
    return EXIT_OK
