import argparse
import math

from esnchip.analysis.noise import NoiseKind
from esnchip.chip.readout import load_weights
from esnchip.commands.common import add_config_args, add_out_arg, announce, config_from_args, out_path
from esnchip.errors import RejectedInput
from esnchip.harness.reports import write_csv
from esnchip.harness.training import noise_sweep, prepare_data, run_training

NAME = "noise"


def register(subparsers) -> None:
    p = subparsers.add_parser(NAME, help="accuracy of a trained readout under injected noise")
    add_config_args(p)
    p.add_argument("--snr", required=True, help="comma-separated SNR grid in dB ('inf' for clean)")
    p.add_argument("--kind", choices=["uniform", "gaussian", "both"], default="both")
    p.add_argument("--p", type=float, default=0.5, help="per-sample corruption probability")
    p.add_argument("--weights", help="trained readout snapshot; trains first when omitted")
    add_out_arg(p, "noise.csv")
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    snrs = [math.inf if v.strip().lower() in ("inf", "clean") else float(v) for v in args.snr.split(",") if v.strip()]
    kinds = list(NoiseKind) if args.kind == "both" else [NoiseKind(args.kind)]
    data = prepare_data(cfg)
    state = load_weights(args.weights) if args.weights else run_training(cfg, data).readout
    if state is None:
        raise RejectedInput("noise sweeps need a fixed-point readout; set experiment.precision=fixed")
    rows = noise_sweep(cfg, state, snrs, kinds, data, bernoulli_p=args.p)
    write_csv(rows, out_path(args), columns=["kind", "snr_db", "accuracy", "macro_f1"])
    for row in rows:
        announce(f"{row['kind']} {row['snr_db']} dB: accuracy={row['accuracy']:.4f}")
    return 0
