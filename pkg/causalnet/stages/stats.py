from __future__ import annotations

import argparse
import logging
from typing import Any, Dict, List

import pandas as pd

from ..core.artifacts import ArtifactStore
from ..core.config import PipelineConfig
from ..core.report import markdown_table
from ..core.stats import STATISTIC_LABELS, describe
from . import load_groups

logger = logging.getLogger(__name__)

NAME = "stats"
HELP = "descriptive statistics for every network (loops excluded)"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    pass


def _rows(groups: Dict[str, List[Any]]) -> List[Dict[str, Any]]:
    rows = []
    for group, nets in groups.items():
        for net in nets:
            block = describe(net)
            census = block.pop("dyad_census")
            block.update({f"dyads_{k}": v for k, v in census.items()})
            rows.append({"group": group, "network": net.stratum.label, **block})
    return rows


def run(cfg: PipelineConfig, store: ArtifactStore) -> Dict[str, Any]:
    groups = load_groups(store)
    store.begin(NAME)
    total = describe(groups["total"][0])
    payload = {
        "total": total,
        "strata": {
            group: [{"network": net.stratum.label, **describe(net)} for net in nets]
            for group, nets in groups.items()
            if group != "total"
        },
    }
    store.write_json(NAME, "stats.json", payload)
    if cfg.fmt != "json":
        rows = _rows(groups)
        if cfg.fmt == "csv":
            store.write_frame(NAME, "stats.csv", pd.DataFrame(rows))
        else:
            columns = [("group", "Group"), ("network", "Network"), ("arcs", "Arcs")] + [
                (name, label) for name, label in STATISTIC_LABELS.items()
            ]
            store.write_text(NAME, "stats.md", markdown_table(rows, columns) + "\n")
    store.finish(NAME)
    return {k: total[k] for k in ("nodes", "arcs", "density")}
