import argparse

from batchscope.core.exceptions import EXIT_OK, BatchScopeError, handle_error
from batchscope.services.report_service import report


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("report", help="Turn run traces into plot-ready CSV series and a summary")
    parser.add_argument("trace_dir", help="Directory holding run_*.jsonl traces")
    parser.add_argument("--top-k", type=int, default=10, help="Rows in the feature tables")
    parser.add_argument("--out", help="Output directory (default: the trace directory)")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    try:
        written = report(args.trace_dir, top_k=args.top_k, out=args.out)
    except BatchScopeError as exc:
        return handle_error(exc)
    for path in written:
        print(path)
    return EXIT_OK
