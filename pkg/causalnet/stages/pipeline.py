from __future__ import annotations

import argparse
import logging
from typing import Any, Dict, Optional

from ..core.artifacts import ArtifactStore
from ..core.config import PipelineConfig
from ..core.errors import ConvergenceError
from . import code, cug, extract, network, pca, regress, report, stats

logger = logging.getLogger(__name__)

NAME = "all"
HELP = "run every analysis stage in order"

PIPELINE = (extract, code, network, stats, cug, pca, regress, report)


def add_arguments(parser: argparse.ArgumentParser) -> None:
    code.add_arguments(parser)
    pca.add_arguments(parser)
    regress.add_arguments(parser)


def run(cfg: PipelineConfig, store: ArtifactStore) -> Dict[str, Any]:
    summary: Dict[str, Any] = {}
    failure: Optional[ConvergenceError] = None
    for stage in PIPELINE:
        logger.info("stage %s", stage.NAME)
        try:
            summary[stage.NAME] = stage.run(cfg, store)
        except ConvergenceError as e:
            # outputs are written before the raise; the report still gets built
            failure = e
            summary[stage.NAME] = {"converged": False}
    if failure is not None:
        raise failure
    return summary
