import argparse

from esnchip.chip.readout import save_weights
from esnchip.commands.common import add_config_args, add_out_arg, announce, config_from_args, out_path
from esnchip.harness.experiment import dump_config
from esnchip.harness.reports import report_payload, write_json
from esnchip.harness.training import run_training

NAME = "train"


def register(subparsers) -> None:
    p = subparsers.add_parser(NAME, help="train the readout and score the test split")
    add_config_args(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--precision", choices=["fixed", "float"])
    p.add_argument("--weights-out", help="save the trained fixed-point readout here")
    add_out_arg(p, "train.json")
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    extra = []
    if args.epochs is not None:
        extra.append(f"experiment.epochs={args.epochs}")
    if args.precision:
        extra.append(f"experiment.precision={args.precision}")
    cfg = config_from_args(args, extra)
    result = run_training(cfg)
    config = dump_config(cfg)
    if args.weights_out and result.readout is not None:
        save_weights(result.readout, args.weights_out, config)
    write_json(report_payload(NAME, config, result.summary()), out_path(args))
    announce(f"accuracy={result.metrics.accuracy:.4f} macro_f1={result.metrics.macro_f1:.4f}")
    return 0
