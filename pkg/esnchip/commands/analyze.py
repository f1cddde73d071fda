import argparse

import numpy as np

from esnchip.analysis.lyapunov import LyapunovConfig, lyapunov_for_model
from esnchip.analysis.spectral import eigen_sweep, esp_shift_for_sparsity
from esnchip.chip.fixed_point import SQ3_12
from esnchip.chip.reservoir import FloatReservoir, Reservoir
from esnchip.commands.common import add_config_args, add_out_arg, announce, config_from_args, out_path
from esnchip.errors import RejectedInput
from esnchip.harness.experiment import dump_config
from esnchip.harness.reports import report_payload, write_json
from esnchip.harness.training import compare_with_oracle, prepare_data, run_training

NAME = "analyze"


def register(subparsers) -> None:
    p = subparsers.add_parser(NAME, help="spectral radius, Lyapunov exponent and ridge oracle reports")
    add_config_args(p)
    p.add_argument("--eigen", action="store_true", help="spectral radius and ESP shift per sparsity")
    p.add_argument("--lyapunov", action="store_true", help="Lyapunov exponent, fixed point vs float")
    p.add_argument("--oracle", action="store_true", help="ridge readout vs on-chip SGD")
    p.add_argument("--sparsities", default="0.05,0.1,0.2,0.3,0.4")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--samples", type=int, default=2000, help="Lyapunov test samples N")
    p.add_argument("--betas", help="comma-separated ridge penalties")
    add_out_arg(p, "analyze.json")
    p.set_defaults(handler=run)


def _eigen(cfg, args) -> dict:
    sparsities = [float(v) for v in args.sparsities.split(",") if v.strip()]
    base = cfg.reservoir.weights
    shifts = {str(sp): esp_shift_for_sparsity(sp, args.seeds, cfg.reservoir.n_r, base) for sp in sparsities}
    unshifted = eigen_sweep(sparsities, args.seeds, cfg.reservoir.n_r, base, shift=0)
    calibrated = []
    for sp in sparsities:
        calibrated.extend(eigen_sweep([sp], args.seeds, cfg.reservoir.n_r, base, shift=shifts[str(sp)]))
    for row in calibrated:
        announce(f"sparsity={row['sparsity']}: shift {row['shift']}, mean radius {row['mean_radius']:.4f}, "
                 f"cv {row['cv']:.4f}")
    return {"esp_shift": shifts, "unshifted": unshifted, "calibrated": calibrated}


def _lyapunov(cfg, data, args) -> dict:
    U = np.concatenate([r.inputs for r in data.test])[:args.samples] / float(SQ3_12.one)
    lcfg = LyapunovConfig(n_samples=len(U))
    fixed = lyapunov_for_model(Reservoir(cfg.reservoir), U, lcfg)
    ref = lyapunov_for_model(FloatReservoir(cfg.reservoir), U, lcfg)
    announce(f"lyapunov fixed={fixed.value:.6f} float={ref.value:.6f}")
    return {
        "fixed": {"value": fixed.value, "pairs": fixed.pairs, "skipped_input": fixed.skipped_input,
                  "skipped_state": fixed.skipped_state},
        "float": {"value": ref.value, "pairs": ref.pairs, "skipped_input": ref.skipped_input,
                  "skipped_state": ref.skipped_state},
    }


def run(args: argparse.Namespace) -> int:
    if not (args.eigen or args.lyapunov or args.oracle):
        raise RejectedInput("choose at least one of --eigen, --lyapunov, --oracle")
    cfg = config_from_args(args)
    results = {}
    if args.eigen:
        results["eigen"] = _eigen(cfg, args)
    if args.lyapunov or args.oracle:
        data = prepare_data(cfg)
        if args.lyapunov:
            results["lyapunov"] = _lyapunov(cfg, data, args)
        if args.oracle:
            betas = [float(b) for b in args.betas.split(",")] if args.betas else None
            oracle = compare_with_oracle(cfg, run_training(cfg, data), data, betas)
            announce(f"ridge={oracle['ridge_accuracy']:.4f} (beta={oracle['best_beta']:g}) "
                     f"sgd={oracle['sgd_accuracy']:.4f}")
            results["oracle"] = oracle
    write_json(report_payload(NAME, dump_config(cfg), results), out_path(args))
    return 0
