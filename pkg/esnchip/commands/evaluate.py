import argparse

from esnchip.chip.readout import load_weights
from esnchip.commands.common import add_config_args, add_out_arg, announce, config_from_args, out_path
from esnchip.harness.experiment import dump_config
from esnchip.harness.reports import report_payload, write_json
from esnchip.harness.training import run_eval

NAME = "eval"


def register(subparsers) -> None:
    p = subparsers.add_parser(NAME, help="score saved readout weights on the test split")
    add_config_args(p)
    p.add_argument("--weights", required=True, help="weight snapshot written by train --weights-out")
    add_out_arg(p, "eval.json")
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    metrics = run_eval(cfg, load_weights(args.weights))
    write_json(report_payload(NAME, dump_config(cfg), {"weights": args.weights, "metrics": metrics.as_dict()}),
               out_path(args))
    announce(f"accuracy={metrics.accuracy:.4f} macro_f1={metrics.macro_f1:.4f}")
    return 0
