import argparse

from esnchip.commands.common import add_config_args, add_out_arg, announce, config_from_args, out_path
from esnchip.harness.experiment import dump_config
from esnchip.harness.reports import report_payload, write_json
from esnchip.harness.tuning import pso_tune

NAME = "tune"


def register(subparsers) -> None:
    p = subparsers.add_parser(NAME, help="PSO search over delta, alpha_shift, n_r and sparsity")
    add_config_args(p)
    p.add_argument("--particles", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--workers", type=int, help="process count (default $ESNCHIP_WORKERS)")
    add_out_arg(p, "tune.json")
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    extra = []
    if args.particles is not None:
        extra.append(f"pso.particles={args.particles}")
    if args.iterations is not None:
        extra.append(f"pso.iterations={args.iterations}")
    cfg = config_from_args(args, extra)
    best, result = pso_tune(cfg.pso, cfg, workers=args.workers)
    results = {
        "best_position": result.best_position,
        "best_fitness": result.best_fitness,
        "history": result.history,
        "evaluations": result.evaluations,
        "best_config": dump_config(best),
    }
    write_json(report_payload(NAME, dump_config(cfg), results), out_path(args))
    announce(f"best {result.best_position} validation accuracy={result.best_fitness:.4f}")
    return 0
