import argparse

from batchscope.core.exceptions import EXIT_OK, BatchScopeError, ConfigError, handle_error
from batchscope.services.analysis_service import AnalyzeOptions, analyze_log
from batchscope.services.benchmarks import make_problem
from batchscope.services.report_service import report


def parse_bounds(text: str) -> list[tuple[float, float]]:
    """'lo:hi,lo:hi,...' -> [(lo, hi), ...]"""
    pairs = []
    for j, item in enumerate(text.split(","), start=1):
        try:
            lo, hi = (float(part) for part in item.split(":"))
        except ValueError:
            raise ConfigError("INVALID_BOUNDS", f"bounds entry {j} {item!r} is not lo:hi", entry=j) from None
        pairs.append((lo, hi))
    return pairs


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("analyze", help="Compute the metrics on an external optimizer's CSV log")
    parser.add_argument("csv", help="CSV with header x1..xd,y or iter,x1..xd,y")
    parser.add_argument("--out", help="Output directory for the trace and report files")
    parser.add_argument("--run-id", help="Trace id (default: the CSV file stem)")
    parser.add_argument("--seed", type=int, default=0, help="Seed for the stochastic importance estimates")
    parser.add_argument("--problem", help="Take bounds from this benchmark (needs --dim)")
    parser.add_argument("--dim", type=int)
    parser.add_argument("--bounds", help="Explicit bounds lo:hi,lo:hi,...")
    parser.add_argument("--fit-surrogate", action="store_true",
                        help="Fit the reference GP for CHEE, HVE, FIEE and FIS")
    parser.add_argument("--fi-method", choices=["permutation", "shapley"], default="permutation")
    parser.add_argument("--exploration", choices=["surrogate", "distance"], default="distance")
    parser.add_argument("--tree-max-depth", type=int, default=4)
    parser.add_argument("--tree-min-leaf", type=int, default=5)
    parser.add_argument("--top-k", type=int, default=10, help="Rows in the feature tables")
    parser.set_defaults(handler=handle)


def _options(args: argparse.Namespace) -> AnalyzeOptions:
    if args.problem is not None and args.bounds is not None:
        raise ConfigError("CONFLICTING_BOUNDS", "give either --problem/--dim or --bounds, not both")
    bounds = None
    if args.problem is not None:
        if args.dim is None:
            raise ConfigError("MISSING_DIMENSION", "--problem needs --dim")
        bounds = make_problem(args.problem, args.dim).bounds.as_pairs()
    elif args.bounds is not None:
        bounds = parse_bounds(args.bounds)
    values = {
        "run_id": args.run_id,
        "seed": args.seed,
        "bounds": bounds,
        "fit_surrogate": args.fit_surrogate,
        "fi_method": args.fi_method,
        "exploration": args.exploration,
        "tree_max_depth": args.tree_max_depth,
        "tree_min_leaf": args.tree_min_leaf,
    }
    if args.out is not None:
        values["out"] = args.out
    try:
        return AnalyzeOptions(**values)
    except ValueError as exc:
        raise ConfigError("INVALID_CONFIG", str(exc)) from exc


def handle(args: argparse.Namespace) -> int:
    """
    Returns:
        0: trace and report written
        2: bad options or an unreadable/malformed CSV, nothing written
        3: metric computation failed
    """
    try:
        options = _options(args)
        path = analyze_log(args.csv, options)
        report(path.parent, top_k=args.top_k, out=path.parent, traces=[path])
    except BatchScopeError as exc:
        return handle_error(exc)
    print(path)
    return EXIT_OK
