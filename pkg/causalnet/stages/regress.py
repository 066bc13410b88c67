from __future__ import annotations

import argparse
import logging
from typing import Any, Dict

from ..core.artifacts import ArtifactStore
from ..core.config import PipelineConfig
from ..core.errors import ConvergenceError
from ..core.features import ModelFormula, build_features, design_matrix
from ..core.regression import fit_design, regression_report
from . import load_coded, load_groups, load_messages, resolve_lexicon

logger = logging.getLogger(__name__)

NAME = "regress"
HELP = "negative binomial (NB2) model of retransmission counts"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--formula",
        help="predictor blocks joined by '+', e.g. structural+usage+themes+controls (default all)",
    )
    parser.add_argument("--cause-reference", help="reference theme (or concept) for cause themes")
    parser.add_argument("--effect-reference", help="reference theme (or concept) for effect themes")


def run(cfg: PipelineConfig, store: ArtifactStore) -> Dict[str, Any]:
    coded = load_coded(store)
    uncoded = sum(1 for _ in store.read_jsonl("code", "uncoded.jsonl"))
    groups = load_groups(store)
    messages = load_messages(cfg)
    lexicon = resolve_lexicon(cfg)
    reg = cfg.regression
    table = build_features(
        coded,
        messages,
        groups["total"][0],
        groups["month"],
        lexicon,
        epoch=cfg.epoch,
        originals_only=reg.originals_only,
        cum_window=reg.cum_window,
        uncoded_units=uncoded,
    )
    formula = ModelFormula.parse(reg.formula)
    design = design_matrix(table, formula)
    fit = fit_design(design)
    report = regression_report(fit, table)

    store.begin(NAME)
    store.write_frame(NAME, "features.csv", table.frame)
    store.write_json(NAME, "funnel.json", table.funnel)
    payload = fit.to_dict()
    payload.update(
        formula=str(formula),
        dropped_columns=design.dropped,
        cause_reference=table.cause_reference,
        effect_reference=table.effect_reference,
        cum_window=reg.cum_window,
        originals_only=reg.originals_only,
    )
    store.write_json(NAME, "fit.json", payload)
    store.write_text(NAME, "table.md", report.to_markdown())
    if report.converged:
        store.write_text(NAME, "table.csv", report.to_csv())
    store.finish(NAME)
    if not fit.converged:
        raise ConvergenceError(f"negative binomial fit did not converge: {fit.message}")
    return {"rows": fit.n_obs, "theta": fit.theta, "log_likelihood": fit.log_likelihood}
