from __future__ import annotations

import argparse
import logging
from typing import Any, Dict

from ..core.artifacts import ArtifactStore
from ..core.config import PipelineConfig
from ..core.graph import degree_table
from ..core.report import build_report, monthly_trends, render_markdown, top_narratives
from . import load_coded, load_groups, load_messages

logger = logging.getLogger(__name__)

NAME = "report"
HELP = "bundle statistics, tables, PCA and regression into one JSON + markdown report"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    pass


def run(cfg: PipelineConfig, store: ArtifactStore) -> Dict[str, Any]:
    extraction = store.read_json("extract", "extraction_report.json")
    coding = store.read_json("code", "coding_report.json")
    coded = load_coded(store)
    groups = load_groups(store)
    descriptive = store.read_json("stats")["total"]
    messages = load_messages(cfg)
    cug = store.read_json("cug")["results"] if store.has("cug") else None
    pca = store.read_json("pca") if store.has("pca") else None
    regression = store.read_json("regress") if store.has("regress") else None
    regression_md = (
        store.path("regress", "table.md").read_text(encoding="utf-8")
        if store.has("regress", "table.md")
        else None
    )

    total = groups["total"][0]
    narratives = top_narratives(total, coded, messages)
    pairs = list(zip(narratives["cause"], narratives["effect"]))
    trends = monthly_trends(groups["month"], pairs)
    bundle = build_report(
        corpus=extraction.pop("corpus"),
        extraction=extraction,
        coding=coding,
        networks=groups,
        descriptive=descriptive,
        narratives=narratives,
        trends=trends,
        cug=cug,
        pca=pca,
        regression=regression,
    )

    store.begin(NAME)
    store.write_json(NAME, "report.json", bundle)
    store.write_text(NAME, "report.md", render_markdown(bundle, regression_md))
    store.write_frame(NAME, "monthly_trends.csv", trends)
    if cfg.fmt == "csv":
        store.write_frame(NAME, "top_narratives.csv", narratives)
        store.write_frame(NAME, "degree_table.csv", degree_table(total))
    store.finish(NAME)
    return {"narratives": len(narratives), "months": len(groups["month"])}
