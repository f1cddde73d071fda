"""
Subcommand registration.

ORDER MATTERS for the help text: subcommands are listed in the order they are
registered here, which follows a typical session (train, eval, then the
hardware and analysis reports, then sweeps).
"""
import argparse
import logging

from . import train
from . import evaluate
from . import latency
from . import analyze
from . import noise
from . import tune

COMMANDS = (train, evaluate, latency, analyze, noise, tune)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="esnchip",
        description="Bit-faithful simulator of a fixed-point echo state network chip.",
    )
    parser.add_argument("--log-level", help="overrides ESNCHIP_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for command in COMMANDS:
        command.register(subparsers)
        logging.debug(f"Registered subcommand: {command.NAME}")
    return parser
