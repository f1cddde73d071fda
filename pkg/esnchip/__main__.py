import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from esnchip.commands import build_parser
from esnchip.config import setup_logging
from esnchip.errors import EsnChipError


def cli_main(argv: Optional[List[str]] = None) -> int:
    """
    Exit codes: 0 success, 1 any runtime error (message on stderr),
    2 usage errors (argparse prints the usage text).
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    setup_logging(args.log_level)
    try:
        return args.handler(args)
    except (EsnChipError, OSError, ValidationError) as e:
        logging.error(f"{args.command} failed: {e}")
        print(f"esnchip {args.command}: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        logging.warning("Interrupted.")
        return 130


if __name__ == "__main__":
    sys.exit(cli_main())
