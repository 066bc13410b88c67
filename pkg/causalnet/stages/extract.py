from __future__ import annotations

import argparse
import logging
from typing import Any, Dict

from ..core.artifacts import ArtifactStore
from ..core.config import PipelineConfig
from ..core.corpus import summarize
from ..core.extraction import extract_all, extraction_report
from . import load_messages

logger = logging.getLogger(__name__)

NAME = "extract"
HELP = "split messages into causal units at their first eligible connective"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    pass


def run(cfg: PipelineConfig, store: ArtifactStore) -> Dict[str, Any]:
    messages = load_messages(cfg)
    store.begin(NAME)
    units, skips = extract_all(messages)
    summary = summarize(messages)
    report = extraction_report(messages).to_dict()
    report["corpus"] = {
        "accepted": summary.accepted,
        "rejected": summary.rejected,
        "reasons": summary.reasons,
    }
    store.write_jsonl(NAME, "units.jsonl", (u.to_record() for u in units))
    store.write_jsonl(NAME, "skips.jsonl", (s.to_record() for s in skips))
    store.write_jsonl(
        NAME,
        "rejections.jsonl",
        ({"line": r.line, "id": r.record_id, "reason": r.reason} for r in messages.rejections),
    )
    store.write_json(NAME, "extraction_report.json", report)
    store.finish(NAME)
    return {"messages": len(messages), "units": len(units), "skipped": len(skips)}
