"""causalnet: causal narrative networks from terse public-agency messages."""

from __future__ import annotations

import argparse
import sys

from .core import VERSION
from .core.cug import DEFAULT_REPLICATES
from .core.config import FORMATS, LOG_LEVELS
from .core.features import CUM_WINDOWS
from .core.graph import STRATIFIERS
from .stages import code, cug, extract, network, pca, pipeline, regress, report, stats, synth

__version__ = VERSION

STAGES = (extract, code, network, stats, cug, pca, regress, report, synth, pipeline)


class UsageParser(argparse.ArgumentParser):
    """argparse with usage errors on exit status 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"error: {message}\n")


def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file (same keys as the flags)")
    common.add_argument("--corpus", help="message corpus (.jsonl or .csv)")
    common.add_argument("--lexicon", help="lexicon TOML (default: bundled demo lexicon)")
    common.add_argument("--out", help="output directory (env CAUSALNET_OUTPUT_DIR)")
    common.add_argument("--epoch", help="first month of the observation window, YYYY-MM")
    common.add_argument("--seed", type=int, help="root seed for every stochastic stage")
    common.add_argument(
        "--replicates", type=int, help=f"CUG draws per test (default {DEFAULT_REPLICATES})"
    )
    common.add_argument("--workers", type=int, help="processes for CUG replicates (default 1)")
    common.add_argument(
        "--stratify", choices=STRATIFIERS, help="graph set for network PCA (default role)"
    )
    common.add_argument("--components", type=int, help="principal components to keep")
    common.add_argument(
        "--originals-only",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="regress on original messages only (default on)",
    )
    common.add_argument(
        "--cum-window", choices=CUM_WINDOWS, help="cumulative usage window (default before)"
    )
    common.add_argument(
        "--format", choices=FORMATS, help="extra table format next to the JSON output"
    )
    common.add_argument(
        "--log-level", type=str.upper, choices=LOG_LEVELS, help="logging level (default INFO)"
    )
    return common


def create_parser() -> argparse.ArgumentParser:
    parser = UsageParser(prog="causalnet", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    common = _common_arguments()
    sub = parser.add_subparsers(dest="stage", metavar="STAGE", required=True)
    for module in STAGES:
        stage_parser = sub.add_parser(module.NAME, help=module.HELP, parents=[common])
        module.add_arguments(stage_parser)
        stage_parser.set_defaults(handler=module.run)
    return parser
