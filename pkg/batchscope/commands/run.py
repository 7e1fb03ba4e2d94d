import argparse

from batchscope.core.exceptions import EXIT_OK, BatchScopeError, handle_error
from batchscope.models.run_config import build_run_config
from batchscope.services.experiment_service import experiment_service

# flag name -> RunConfig field; every flag defaults to None so the config file shows through
RUN_FLAGS = (
    "problem", "dim", "strategy", "batch_size", "iterations", "candidates", "init_size", "seed", "runs",
    "out", "ucb_beta", "tree_max_depth", "tree_min_leaf", "fi_method", "exploration", "space_filling",
)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("run", help="Run the instrumented batch optimization loop")
    parser.add_argument("--config", help="key=value file; flags override its entries")
    parser.add_argument("--problem", help="Benchmark: branin, rosenbrock, rastrigin or levy")
    parser.add_argument("--dim", type=int, help="Problem dimension")
    parser.add_argument("--strategy", choices=["random", "ucb", "maximin", "pareto"])
    parser.add_argument("--batch-size", type=int, help="Points per batch (k)")
    parser.add_argument("--iterations", type=int, help="Batches per run (T, default 30)")
    parser.add_argument("--candidates", type=int, help="Candidate set size (m, default 1000)")
    parser.add_argument("--init-size", type=int, help="Initial design size (default 2*(d+1))")
    parser.add_argument("--seed", type=int, help="Seed of the first run; run i uses seed+i")
    parser.add_argument("--runs", type=int, help="Number of seeded runs")
    parser.add_argument("--out", help="Output directory for run_<id>.jsonl traces")
    parser.add_argument("--ucb-beta", type=float, help="Confidence multiplier of the ucb strategy")
    parser.add_argument("--tree-max-depth", type=int, help="Reference tree depth for PSSA and FIBB")
    parser.add_argument("--tree-min-leaf", type=int, help="Reference tree minimum leaf size")
    parser.add_argument("--fi-method", choices=["permutation", "shapley"])
    parser.add_argument("--exploration", choices=["surrogate", "distance"],
                        help="Exploration score: GP standard deviation or distance to evaluated points")
    parser.add_argument("--space-filling", action="store_const", const=True,
                        help="Draw candidates from a Latin hypercube")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    """
    Returns:
        0: every run finished and its trace is complete
        2: invalid configuration, nothing written
        3: a run aborted; its partial trace stays on disk
    """
    try:
        config = build_run_config({name: getattr(args, name) for name in RUN_FLAGS}, args.config)
        paths = experiment_service.run(config)
    except BatchScopeError as exc:
        return handle_error(exc)
    for path in paths:
        print(path)
    return EXIT_OK
