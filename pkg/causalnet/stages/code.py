from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Any, Dict

from ..core.artifacts import ArtifactStore
from ..core.config import PipelineConfig
from ..core.extraction import CausalUnit
from ..core.lexicon import code_all, coding_report, sample_uncoded
from . import resolve_lexicon

logger = logging.getLogger(__name__)

NAME = "code"
HELP = "code causal units into lexicon concepts and themes"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--sample-uncoded",
        type=int,
        metavar="N",
        help="also write a seeded sample of N uncoded subparts for keyword review",
    )


def run(cfg: PipelineConfig, store: ArtifactStore) -> Dict[str, Any]:
    units = [CausalUnit.from_record(rec) for rec in store.read_jsonl("extract")]
    lexicon = resolve_lexicon(cfg)
    store.begin(NAME)
    coded, uncoded = code_all(units, lexicon)
    store.write_jsonl(NAME, "coded.jsonl", (c.to_record() for c in coded))
    store.write_jsonl(
        NAME,
        "uncoded.jsonl",
        (dict(u.unit.to_record(), failed=[s.value for s in u.failed]) for u in uncoded),
    )
    report = coding_report(units, lexicon).to_dict()
    report["lexicon"] = Path(lexicon.source).name if lexicon.source else None
    store.write_json(NAME, "coding_report.json", report)
    if cfg.sample_uncoded:
        assert cfg.seed is not None
        sample = sample_uncoded(units, lexicon, cfg.sample_uncoded, cfg.seed)
        store.write_jsonl(NAME, "uncoded_sample.jsonl", (s.to_record() for s in sample))
    store.finish(NAME)
    return {"units": len(units), "coded": len(coded), "uncoded": len(uncoded)}
