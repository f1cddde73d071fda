import argparse
import logging
from pathlib import Path
from typing import Optional

from esnchip.config import REPORT_DIR
from esnchip.harness.experiment import ExperimentConfig, load_config


def add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="INI experiment file")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config key (repeatable)")
    parser.add_argument("--seed", type=int, help="global seed (same as --set experiment.global_seed=N)")


def add_out_arg(parser: argparse.ArgumentParser, default_name: str) -> None:
    parser.add_argument("--out", help=f"report path (default: $ESNCHIP_REPORT_DIR/{default_name})")
    parser.set_defaults(default_out=default_name)


def config_from_args(args: argparse.Namespace, extra: Optional[list] = None) -> ExperimentConfig:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"experiment.global_seed={args.seed}")
    overrides.extend(extra or [])
    return load_config(args.config, overrides)


def out_path(args: argparse.Namespace) -> Path:
    return Path(args.out) if args.out else REPORT_DIR / args.default_out


def announce(message: str) -> None:
    """User-facing result line on stdout; the same text also goes to the log."""
    print(message)
    logging.info(message)
