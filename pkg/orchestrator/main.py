"""
Command-line front door.

Exit codes: 0 pass, 1 acceptance failure (or a numerical failure), 2 usage or
configuration error.
"""
import argparse
import logging
import sys
from typing import List, Optional

from verifiers.errors import ConfigError

from .config import CONFIG_MODELS, Settings
from .orchestrator import Orchestrator

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
CONFIG_KINDS = ("ConfigError", "InputError", "DomainError")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uniform-verify", description="Uniform-in-model least squares verification")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in CONFIG_MODELS:
        cmd = sub.add_parser(command)
        cmd.add_argument("--config", help="JSON run config")
        cmd.add_argument("--seed", type=int, help="overrides the config seed")
        cmd.add_argument("--out", help="output directory")
        cmd.add_argument("--threads", type=int, help="worker threads")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_PASS if e.code == 0 else EXIT_CONFIG

    try:
        settings = Settings.from_env()
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    # Configure logging
    logging.basicConfig(level=settings.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    result = Orchestrator(settings).run(args.command, args.config, args.seed, args.out, args.threads)
    if not result["success"]:
        print(f"error ({result['kind']}): {result['error']}", file=sys.stderr)
        return EXIT_CONFIG if result["kind"] in CONFIG_KINDS else EXIT_FAIL
    if not result["passed"]:
        logger.error(f"{args.command}: acceptance failed; see {', '.join(result['outputs'])}")
        return EXIT_FAIL
    return EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
