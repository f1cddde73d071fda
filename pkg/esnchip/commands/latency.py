import argparse
import logging

from esnchip.chip.dataflow import Topology, TopologySpec, sweep_throughput, throughput
from esnchip.config import REPORT_DIR
from esnchip.harness.reports import to_csv_text, write_csv

NAME = "latency"


def register(subparsers) -> None:
    p = subparsers.add_parser(NAME, help="serialization latency and throughput of an interconnect (CSV)")
    p.add_argument("--topology", choices=[t.value for t in Topology], default=Topology.MH_TREE.value)
    p.add_argument("--nr", type=int, default=128)
    p.add_argument("--kappa", type=float, default=10)
    p.add_argument("--nrows", type=int, default=32)
    p.add_argument("--no", type=int, default=4)
    p.add_argument("--sigma", type=int)
    p.add_argument("--clock", type=float, default=50e6, help="clock frequency in Hz")
    p.add_argument("--no-pipeline", action="store_true")
    p.add_argument("--recurrent-fraction", type=float, default=1.0)
    p.add_argument("--sweep", help="comma-separated n_r grid; one CSV row per topology and n_r")
    p.add_argument("--out", help="CSV path (single runs print to stdout unless given)")
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    spec = TopologySpec(
        kind=Topology(args.topology), n_r=args.nr, kappa=args.kappa, n_rows=args.nrows, n_o=args.no,
        sigma=args.sigma, clock_hz=args.clock, pipelined=not args.no_pipeline,
        recurrent_fraction=args.recurrent_fraction,
    )
    if args.sweep:
        grid = [int(v) for v in args.sweep.split(",") if v.strip()]
        reports = sweep_throughput(spec, list(Topology), grid)
        write_csv([r.as_row() for r in reports], args.out or REPORT_DIR / "latency_sweep.csv")
        return 0

    report = throughput(spec)
    logging.info(f"{report.topology}: {report.cycles} cycles, {report.cycles_per_sample:g} cycles/sample, "
                 f"{report.samples_per_sec:.0f} samples/s at {spec.clock_hz / 1e6:g} MHz")
    if args.out:
        write_csv([report.as_row()], args.out)
    else:
        print(to_csv_text([report.as_row()]), end="")
    return 0
