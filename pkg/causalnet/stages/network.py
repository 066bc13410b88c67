from __future__ import annotations

import argparse
import logging
from typing import Any, Dict, List

from ..core.artifacts import ArtifactStore
from ..core.config import PipelineConfig
from ..core.corpus import month_bin
from ..core.graph import (
    ConceptNet,
    build_networks,
    degree_table,
    edge_list_frame,
    save_networks,
    sum_networks,
    top_k_edges,
    write_dot,
)
from ..core.errors import GraphError
from ..core.lexicon import CodedUnit
from . import load_coded, load_messages, resolve_lexicon

logger = logging.getLogger(__name__)

NAME = "network"
HELP = "build valued concept networks: total, monthly and per account role"

# downstream stages rely on these groups
_ALWAYS = ("total", "month")
# incoming edges kept per concept in the strongest-effects graphs
TOP_EFFECTS = 3


def add_arguments(parser: argparse.ArgumentParser) -> None:
    pass


def run(cfg: PipelineConfig, store: ArtifactStore) -> Dict[str, Any]:
    coded = load_coded(store)
    messages = load_messages(cfg)
    nodes = resolve_lexicon(cfg).concepts
    by_id = messages.by_id

    in_window: List[CodedUnit] = []
    pre_epoch = 0
    for unit in coded:
        msg = by_id.get(unit.message_id)
        if msg is not None:
            try:
                month_bin(msg.timestamp, cfg.epoch)
            except ValueError:
                pre_epoch += 1
                continue
        in_window.append(unit)
    if pre_epoch:
        logger.warning("left %d pre-epoch unit(s) out of every network", pre_epoch)

    stratifiers = list(_ALWAYS) + [s for s in cfg.stratifiers if s not in _ALWAYS]
    groups: Dict[str, List[ConceptNet]] = {
        s: build_networks(in_window, messages, s, nodes, cfg.epoch) for s in stratifiers
    }

    total = groups["total"][0]
    for group, nets in groups.items():
        if group != "total" and nets and sum_networks(nets) != total:
            raise GraphError(f"{group} networks do not add up to the total network")

    store.begin(NAME)
    store.record(NAME, save_networks(groups, store.path(NAME, "networks.json")))
    all_nets = [net for nets in groups.values() for net in nets]
    store.write_frame(NAME, "edges.csv", edge_list_frame(all_nets))
    store.write_frame(NAME, "degree_table.csv", degree_table(total))
    for group, nets in groups.items():
        for net in nets:
            name = "total" if group == "total" else f"{group}_{net.stratum.label}"
            store.record(NAME, write_dot(net, store.path(NAME, f"dot/{name}.dot")))
    top = [
        top_k_edges(net, TOP_EFFECTS, "strongest_in_per_node")
        for net in groups["total"] + groups.get("role", [])
    ]
    store.write_frame(NAME, "top_edges.csv", edge_list_frame(top))
    for net in top:
        store.record(NAME, write_dot(net, store.path(NAME, f"dot/top/{net.stratum.label}.dot")))
    strata = {group: [net.stratum.to_dict() for net in nets] for group, nets in groups.items()}
    store.write_json(NAME, "strata.json", strata)
    store.finish(NAME)
    counts = {group: len(nets) for group, nets in groups.items()}
    logger.info(
        "networks over %d concept(s): %s",
        len(nodes),
        ", ".join(f"{v} {k}" for k, v in counts.items()),
    )
    return {"units": len(in_window), "pre_epoch": pre_epoch, **counts}
