from __future__ import annotations

import argparse
import logging
from typing import Any, Dict

from ..core.artifacts import ArtifactStore
from ..core.config import PipelineConfig
from ..core.synthetic import DEFAULT_MESSAGES, write_synthetic_corpus

logger = logging.getLogger(__name__)

NAME = "synth"
HELP = "write a seeded synthetic corpus (Jan 2020 - Mar 2021, all five roles)"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--messages", type=int, help=f"number of messages (default {DEFAULT_MESSAGES})"
    )


def run(cfg: PipelineConfig, store: ArtifactStore) -> Dict[str, Any]:
    assert cfg.seed is not None
    store.begin(NAME)
    path = write_synthetic_corpus(store.path(NAME, "corpus.jsonl"), cfg.messages, cfg.seed)
    store.record(NAME, path)
    store.finish(NAME)
    return {"corpus": str(path), "messages": cfg.messages}
