import argparse
import logging
import sys
from typing import List, Optional

from config import Config
from cli import register_commands
from core.errors import HogwildError
from core.experiment_manager import ExperimentManager
from utils.logging_config import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_VERIFICATION = 3


def create_parser(manager: ExperimentManager) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hogwild-rates",
        description="Convergence experiments for lock-free asynchronous SGD"
    )
    parser.add_argument("--log-level", default=Config.LOG_LEVEL)
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_commands(subparsers, manager)
    return parser


def exit_code_for(error: HogwildError) -> int:
    if error.code == "VERIFICATION_FAILED":
        return EXIT_VERIFICATION
    if error.code == "INVALID_CONFIG":
        return EXIT_USAGE
    return EXIT_RUNTIME


def main(argv: Optional[List[str]] = None) -> int:
    manager = ExperimentManager(Config)
    parser = create_parser(manager)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if not e.code else EXIT_USAGE

    configure_logging(args.log_level)
    try:
        return args.handler(args, manager)
    except HogwildError as e:
        logger.error(f"[{e.code}] {e.message}")
        return exit_code_for(e)
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())
