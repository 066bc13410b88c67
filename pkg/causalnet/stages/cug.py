from __future__ import annotations

import argparse
import logging
from typing import Any, Dict

import pandas as pd

from ..core.artifacts import ArtifactStore
from ..core.config import PipelineConfig
from ..core.cug import cug_table
from ..core.report import markdown_table, statistics_table
from ..core.stats import describe
from . import load_groups

logger = logging.getLogger(__name__)

NAME = "cug"
HELP = "conditional uniform graph tests on the dichotomized total network"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    pass


def run(cfg: PipelineConfig, store: ArtifactStore) -> Dict[str, Any]:
    total = load_groups(store)["total"][0]
    assert cfg.seed is not None
    store.begin(NAME)
    results = cug_table(total, cfg.cug.tests, cfg.cug.replicates, cfg.seed, cfg.cug.workers)
    rows = [r.to_dict() for r in results]
    store.write_json(
        NAME,
        "cug.json",
        {"seed": cfg.seed, "replicates": cfg.cug.replicates, "results": rows},
    )
    draws = pd.DataFrame(
        [
            {"statistic": r.statistic_name, "conditioning": r.conditioning.value, "value": v}
            for r in results
            for v in r.null_draws
        ],
        columns=["statistic", "conditioning", "value"],
    )
    store.write_frame(NAME, "null_draws.csv", draws)
    if cfg.fmt != "json":
        table = statistics_table(describe(total), rows)
        if cfg.fmt == "csv":
            store.write_frame(NAME, "cug.csv", table)
        else:
            columns = [
                ("label", "Statistic"),
                ("observed", "Observed"),
                ("conditioning", "Conditioning"),
                ("p_ge", "Pr(X >= Obs)"),
                ("p_le", "Pr(X <= Obs)"),
            ]
            store.write_text(
                NAME, "cug.md", markdown_table(table.to_dict(orient="records"), columns) + "\n"
            )
    store.finish(NAME)
    return {"tests": len(results), "replicates": cfg.cug.replicates}
