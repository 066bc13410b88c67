from __future__ import annotations

import argparse
import logging
from typing import Any, Dict

from ..core.artifacts import ArtifactStore
from ..core.config import PipelineConfig
from ..core.errors import ConfigError, GraphError
from ..core.pca import network_pca, write_pca
from . import load_groups

logger = logging.getLogger(__name__)

NAME = "pca"
HELP = "network PCA over the monthly or role networks"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--centered",
        dest="centered_scores",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="center each graph's cells before forming score graphs",
    )
    parser.add_argument(
        "--scale-loadings",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="report loadings multiplied by sqrt(eigenvalue)",
    )


def run(cfg: PipelineConfig, store: ArtifactStore) -> Dict[str, Any]:
    groups = load_groups(store)
    nets = groups.get(cfg.pca.stratify)
    if not nets:
        raise GraphError(f"no {cfg.pca.stratify} networks; rebuild with `network`")
    if cfg.pca.components > len(nets):
        raise ConfigError(
            f"--components {cfg.pca.components} exceeds the {len(nets)} {cfg.pca.stratify} graphs"
        )
    result = network_pca(
        nets,
        components=cfg.pca.components,
        centered_scores=cfg.pca.centered_scores,
        scale_loadings=cfg.pca.scale_loadings,
    )
    store.begin(NAME)
    for path in write_pca(result, store.ensure_dir(NAME)):
        store.record(NAME, path)
    payload = result.to_dict()
    payload["stratify"] = cfg.pca.stratify
    payload["scree"] = result.eigenvalue_frame().to_dict(orient="records")
    store.write_json(NAME, "pca.json", payload)
    store.finish(NAME)
    return {"graphs": result.p, "components": cfg.pca.components}
