"""Summary tables and the bundled JSON + markdown analysis report."""

from __future__ import annotations

import logging
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .corpus import MessageSet
from .cug import Conditioning
from .graph import ConceptNet, degree_table
from .lexicon import CodedUnit
from .stats import STATISTIC_LABELS

logger = logging.getLogger(__name__)

TOP_NARRATIVES = 5


def top_narratives(
    total: ConceptNet,
    coded: Sequence[CodedUnit],
    messages: MessageSet,
    k: int = TOP_NARRATIVES,
) -> pd.DataFrame:
    """The k heaviest cause->effect cells with their share of all coded units.

    Ties keep the node order of the cause, then of the effect. Each row
    carries the first message (in coded order) asserting that narrative.
    """
    w = total.weights
    n = total.n
    flat = w.ravel()
    order = np.lexsort((np.arange(flat.size), -flat))
    picked = [int(i) for i in order[:k] if flat[i] > 0]
    grand = float(w.sum())
    examples: Dict[Tuple[str, str], str] = {}
    for unit in coded:
        examples.setdefault((unit.cause_concept, unit.effect_concept), unit.message_id)
    by_id = messages.by_id
    rows = []
    for rank, cell in enumerate(picked, start=1):
        cause, effect = total.nodes[cell // n], total.nodes[cell % n]
        example_id = examples.get((cause, effect))
        example = by_id.get(example_id) if example_id else None
        rows.append(
            {
                "rank": rank,
                "cause": cause,
                "effect": effect,
                "count": int(flat[cell]),
                "percent": 100.0 * float(flat[cell]) / grand,
                "example_id": example_id,
                "example": example.text if example else None,
            }
        )
    columns = ["rank", "cause", "effect", "count", "percent", "example_id", "example"]
    return pd.DataFrame(rows, columns=columns)


def monthly_trends(
    monthly: Sequence[ConceptNet], pairs: Sequence[Tuple[str, str]]
) -> pd.DataFrame:
    """Long-format counts (month, cause, effect, count) for the given narratives."""
    rows = []
    for net in monthly:
        for cause, effect in pairs:
            rows.append(
                {
                    "month": net.stratum.key,
                    "cause": cause,
                    "effect": effect,
                    "count": int(net.weight(cause, effect)),
                }
            )
    return pd.DataFrame(rows, columns=["month", "cause", "effect", "count"])


def statistics_table(
    observed: Mapping[str, Any], cug_rows: Sequence[Mapping[str, Any]]
) -> pd.DataFrame:
    """Observed values with upper/lower CUG p-values, one row per tested statistic."""
    rows = []
    for r in cug_rows:
        rows.append(
            {
                "statistic": r["statistic"],
                "label": STATISTIC_LABELS.get(r["statistic"], r["statistic"]),
                "conditioning": Conditioning(r["conditioning"]).label,
                "observed": observed.get(r["statistic"], r["observed"]),
                "p_ge": r["p_ge"],
                "p_le": r["p_le"],
                "replicates": r["replicates"],
            }
        )
    columns = ["statistic", "label", "conditioning", "observed", "p_ge", "p_le", "replicates"]
    return pd.DataFrame(rows, columns=columns)


def build_report(
    *,
    corpus: Mapping[str, Any],
    extraction: Mapping[str, Any],
    coding: Mapping[str, Any],
    networks: Mapping[str, List[ConceptNet]],
    descriptive: Mapping[str, Any],
    narratives: pd.DataFrame,
    trends: pd.DataFrame,
    cug: Optional[Sequence[Mapping[str, Any]]] = None,
    pca: Optional[Mapping[str, Any]] = None,
    regression: Optional[Mapping[str, Any]] = None,
) -> Dict[str, Any]:
    total = networks["total"][0]
    report: Dict[str, Any] = {
        "corpus": dict(corpus),
        "extraction": dict(extraction),
        "coding": {k: v for k, v in coding.items() if k != "rows"},
        "networks": {
            name: {"count": len(nets), "labels": [net.stratum.label for net in nets]}
            for name, nets in networks.items()
        },
        "statistics": {
            "observed": dict(descriptive),
            "cug": statistics_table(descriptive, cug).to_dict(orient="records") if cug else None,
        },
        "degree_table": degree_table(total).to_dict(orient="records"),
        "top_narratives": narratives.to_dict(orient="records"),
        "monthly_trends": trends.to_dict(orient="records"),
        "pca": dict(pca) if pca else None,
        "regression": dict(regression) if regression else None,
    }
    missing = [
        name
        for name, value in (("cug", cug), ("pca", pca), ("regress", regression))
        if not value
    ]
    if missing:
        logger.warning("report: no %s output; run those stages to include it", ", ".join(missing))
    return report


def _cell(value: Any) -> str:
    if value is None or (isinstance(value, float) and not np.isfinite(value)):
        return "NA"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value).replace("|", "\\|")


def markdown_table(rows: Sequence[Mapping[str, Any]], columns: Sequence[Tuple[str, str]]) -> str:
    """Render records as a pipe table; ``columns`` pairs a key with its header."""
    lines = [
        "| " + " | ".join(title for _, title in columns) + " |",
        "|" + "|".join("---" for _ in columns) + "|",
    ]
    for row in rows:
        lines.append("| " + " | ".join(_cell(row.get(key)) for key, _ in columns) + " |")
    return "\n".join(lines)


def render_markdown(report: Mapping[str, Any], regression_md: Optional[str] = None) -> str:
    corpus = report["corpus"]
    coding = report["coding"]
    nets = report["networks"]
    obs = report["statistics"]["observed"]
    out = [
        "# Causal discourse report",
        "",
        f"Messages: {corpus['accepted']} accepted, {corpus['rejected']} rejected. "
        f"Causal units: {report['extraction']['units']}; coded: {coding['coded']} "
        f"(coverage {_cell(coding['coverage'])}).",
        "",
        "Networks: "
        + ", ".join(f"{info['count']} {name}" for name, info in sorted(nets.items()))
        + ".",
        "",
        "## Combined network",
        "",
        f"Density {_cell(obs.get('density'))}, mean in/out degree "
        f"{_cell(obs.get('mean_degree'))}, weakly connected: {obs.get('weakly_connected')}.",
        "",
    ]
    cug = report["statistics"].get("cug")
    if cug:
        out += [
            markdown_table(
                cug,
                [
                    ("label", "Statistic"),
                    ("observed", "Observed"),
                    ("conditioning", "Conditioning"),
                    ("p_ge", "Pr(X >= Obs)"),
                    ("p_le", "Pr(X <= Obs)"),
                ],
            ),
            "",
        ]
    out += [
        "## Degree table",
        "",
        markdown_table(
            report["degree_table"],
            [
                ("concept", "Concept"),
                ("out_degree", "Out"),
                ("in_degree", "In"),
                ("net_degree", "Net"),
            ],
        ),
        "",
        "## Most used causal units",
        "",
        markdown_table(
            report["top_narratives"],
            [
                ("cause", "Cause"),
                ("effect", "Effect"),
                ("count", "Count"),
                ("percent", "Percent"),
                ("example", "Example"),
            ],
        ),
        "",
    ]
    pca = report.get("pca")
    if pca:
        eig = pca.get("eigenvalues", [])
        out += [
            "## Network PCA",
            "",
            f"Graphs: {', '.join(pca.get('graphs', []))}. Leading eigenvalues: "
            + ", ".join(_cell(float(x)) for x in eig[: max(1, pca.get("components", 1))])
            + ".",
            "",
        ]
    if regression_md:
        out += [regression_md.rstrip("\n"), ""]
    return "\n".join(out)
