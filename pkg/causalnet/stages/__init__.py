"""Pipeline stages, one module per subcommand.

Every stage module exposes ``NAME``, ``HELP``, ``add_arguments(parser)`` and
``run(cfg, store) -> dict``; ``causalnet.create_parser`` registers them.
The helpers below reload upstream artifacts.
"""

from __future__ import annotations

import dataclasses
import logging
from typing import Dict, List

from ..core.artifacts import ArtifactStore
from ..core.config import PipelineConfig
from ..core.corpus import MessageSet, load_corpus, summarize
from ..core.graph import ConceptNet, load_networks
from ..core.lexicon import CodedUnit, Lexicon, load_demo_lexicon, load_lexicon

logger = logging.getLogger(__name__)


def load_messages(cfg: PipelineConfig) -> MessageSet:
    assert cfg.corpus_path is not None
    messages = load_corpus(cfg.corpus_path)
    summary = summarize(messages)
    if summary.rejected:
        logger.warning(
            "corpus %s: %d record(s) rejected (%s)",
            cfg.corpus_path,
            summary.rejected,
            ", ".join(f"{k}: {v}" for k, v in summary.reasons.items()),
        )
    return messages


def resolve_lexicon(cfg: PipelineConfig) -> Lexicon:
    """The configured lexicon (demo lexicon by default) with reference overrides."""
    lexicon = load_lexicon(cfg.lexicon_path) if cfg.lexicon_path else load_demo_lexicon()
    cause, effect = lexicon.reference_themes
    reg = cfg.regression
    if reg.cause_reference or reg.effect_reference:
        lexicon = dataclasses.replace(
            lexicon,
            reference_themes=(reg.cause_reference or cause, reg.effect_reference or effect),
        )
        # unknown names fail here rather than at fit time
        _ = (lexicon.cause_reference, lexicon.effect_reference)
    return lexicon


def load_coded(store: ArtifactStore) -> List[CodedUnit]:
    return [CodedUnit.from_record(rec) for rec in store.read_jsonl("code")]


def load_groups(store: ArtifactStore) -> Dict[str, List[ConceptNet]]:
    return load_networks(store.require("network"))
