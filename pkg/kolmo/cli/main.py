"""
Command-line entry point: ``python -m kolmo.cli <command> [options]``.

Exit codes: 0 ok, 1 input error, 2 numeric failure, 3 verification failure.
"""
import argparse
import logging
import sys
from typing import List, Optional

from kolmo import APP_VERSION
from kolmo.cli.commands import COMMAND_TABLE
from kolmo.cli.schemas import COMMANDS, make_run_config
from kolmo.core.config import Precision, settings
from kolmo.core.errors import KolmoError
from kolmo.core.logger import setup_logging
from kolmo.services.unfold_service import SCENARIOS

log = logging.getLogger("kolmo.cli")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kolmo", description="Piecewise quadratic Kolmogorov systems")
    parser.add_argument("--version", action="version", version=f"%(prog)s {APP_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="system JSON file")
    common.add_argument("--order", type=int, default=8, help="truncation order N")
    common.add_argument("--precision", choices=[p.value for p in Precision], default=settings.PRECISION.value)
    common.add_argument("--out", default=settings.OUTPUT_DIR, help="output directory")
    common.add_argument("--rtol", type=float, default=settings.RTOL)
    common.add_argument("--atol", type=float, default=settings.ATOL)
    common.add_argument("--log-level", default=settings.LOG_LEVEL)

    for name in COMMANDS:
        cmd = sub.add_parser(name, parents=[common])
        if name == "unfold":
            cmd.add_argument("--scenario", choices=sorted(SCENARIOS), default="bclcc")
        if name == "verify":
            cmd.add_argument("--list", dest="list_only", action="store_true", help="list criteria only")
            cmd.add_argument("--only", type=int, help="run a single criterion")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    values = {k: v for k, v in vars(args).items() if k != "log_level" and v is not None}
    try:
        run = make_run_config(**values)
        return COMMAND_TABLE[run.command](run)
    except KolmoError as exc:
        log.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
