"""Valued concept digraphs ("discourse networks") and their strata.

Cell ``(A, B)`` of a network counts coded units asserting "A caused B". Every
network built from one lexicon shares its node order, so strata are
cell-aligned and can be summed, compared and fed to the network PCA.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd

from .corpus import (
    DEFAULT_EPOCH,
    ROLE_GROUPS,
    AccountRole,
    Message,
    MessageSet,
    month_bin,
    month_label,
    partition_by_month,
)
from .errors import GraphError
from .lexicon import CodedUnit

logger = logging.getLogger(__name__)

STRATIFIERS = ("total", "month", "role", "role3")


@dataclass(frozen=True)
class Stratum:
    kind: str
    key: Optional[Union[int, str]] = None
    label: str = "total"

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "key": self.key, "label": self.label}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "Stratum":
        return cls(kind=raw["kind"], key=raw.get("key"), label=raw.get("label", raw["kind"]))


TOTAL = Stratum("total", None, "total")


class ConceptNet:
    """Immutable valued digraph over a fixed, ordered concept list."""

    def __init__(self, nodes: Sequence[str], weights: Any, stratum: Stratum = TOTAL):
        w = np.array(weights, copy=True)
        n = len(nodes)
        if w.shape != (n, n):
            raise GraphError(f"{stratum.label}: weights shape {w.shape} does not match {n} nodes")
        if len(set(nodes)) != n:
            raise GraphError(f"{stratum.label}: duplicate node names")
        w.setflags(write=False)
        self._nodes = tuple(nodes)
        self._weights = w
        self._stratum = stratum

    @property
    def nodes(self) -> Tuple[str, ...]:
        return self._nodes

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def stratum(self) -> Stratum:
        return self._stratum

    @property
    def n(self) -> int:
        return len(self._nodes)

    @property
    def total_weight(self) -> float:
        return self._weights.sum().item()

    @property
    def is_dichotomous(self) -> bool:
        return bool(np.isin(self._weights, (0, 1)).all())

    def index(self, concept: str) -> int:
        return self._nodes.index(concept)

    def weight(self, cause: str, effect: str):
        return self._weights[self.index(cause), self.index(effect)].item()

    def with_weights(self, weights: Any, stratum: Optional[Stratum] = None) -> "ConceptNet":
        return ConceptNet(self._nodes, weights, stratum or self._stratum)

    def edges(self) -> List[Tuple[str, str, Any]]:
        rows, cols = np.nonzero(self._weights)
        return [
            (self._nodes[i], self._nodes[j], self._weights[i, j].item()) for i, j in zip(rows, cols)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {"stratum": self._stratum.to_dict(), "weights": self._weights.tolist()}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConceptNet):
            return NotImplemented
        return (
            self._nodes == other._nodes
            and self._stratum == other._stratum
            and np.array_equal(self._weights, other._weights)
        )

    def __repr__(self) -> str:
        return f"ConceptNet({self._stratum.label!r}, n={self.n}, weight={self.total_weight})"


def _stratum_of(
    msg: Message, stratifier: str, epoch: Union[str, Tuple[int, int]]
) -> Tuple[Union[int, str, None], str]:
    if stratifier == "total":
        return None, "total"
    if stratifier == "month":
        try:
            idx = month_bin(msg.timestamp, epoch)
        except ValueError:
            raise GraphError(f"pre-epoch message {msg.id}")
        return idx, month_label(idx, epoch)
    if stratifier == "role":
        return msg.account_role.value, msg.account_role.value
    if stratifier == "role3":
        return msg.account_role.group, msg.account_role.group
    raise GraphError(f"unknown stratifier {stratifier!r}")


def build_networks(
    units: Iterable[CodedUnit],
    messages: MessageSet,
    stratifier: str,
    nodes: Sequence[str],
    epoch: Union[str, Tuple[int, int]] = DEFAULT_EPOCH,
) -> List[ConceptNet]:
    """Count coded units into one network per stratum.

    Month strata run contiguously over the in-window months the corpus
    covers, so a month without coded units still gets an empty network.
    Role strata follow the role enumeration order and include only roles
    that occur.
    """
    index = {c: i for i, c in enumerate(nodes)}
    n = len(nodes)
    by_id = messages.by_id
    cells: Dict[Any, np.ndarray] = {}
    labels: Dict[Any, str] = {}
    for unit in units:
        msg = by_id.get(unit.message_id)
        if msg is None:
            raise GraphError(f"unit references unknown message {unit.message_id}")
        try:
            i, j = index[unit.cause_concept], index[unit.effect_concept]
        except KeyError as e:
            raise GraphError(f"unit {unit.message_id}: concept {e.args[0]} is not a node")
        key, label = _stratum_of(msg, stratifier, epoch)
        if key not in cells:
            cells[key] = np.zeros((n, n), dtype=np.int64)
            labels[key] = label
        cells[key][i, j] += 1

    if stratifier == "total":
        return [ConceptNet(nodes, cells.get(None, np.zeros((n, n), dtype=np.int64)), TOTAL)]
    if stratifier == "month":
        months = set(cells) | set(partition_by_month(messages, epoch))
        if not months:
            return []
        first, last = min(months), max(months)
        return [
            ConceptNet(
                nodes,
                cells.get(m, np.zeros((n, n), dtype=np.int64)),
                Stratum("month", m, month_label(m, epoch)),
            )
            for m in range(first, last + 1)
        ]
    order = [r.value for r in AccountRole] if stratifier == "role" else list(ROLE_GROUPS)
    return [
        ConceptNet(nodes, cells[k], Stratum(stratifier, k, labels[k])) for k in order if k in cells
    ]


def sum_networks(nets: Sequence[ConceptNet], stratum: Stratum = TOTAL) -> ConceptNet:
    if not nets:
        raise GraphError("no networks to sum")
    _check_aligned(nets)
    return nets[0].with_weights(sum(net.weights for net in nets), stratum)


def _check_aligned(nets: Sequence[ConceptNet]) -> None:
    reference = nets[0].nodes
    for net in nets[1:]:
        if net.nodes != reference:
            raise GraphError(
                f"stratum {net.stratum.label}: node list differs from {nets[0].stratum.label}"
            )


def dichotomize(net: ConceptNet, threshold: int = 1) -> ConceptNet:
    if threshold < 1:
        raise ValueError("threshold must be a positive integer")
    return net.with_weights((net.weights >= threshold).astype(np.int64))


def degree_table(net: ConceptNet) -> pd.DataFrame:
    """Out/in/net strength per concept, sorted by |net| descending (stable)."""
    out_deg = net.weights.sum(axis=1)
    in_deg = net.weights.sum(axis=0)
    table = pd.DataFrame(
        {
            "concept": list(net.nodes),
            "out_degree": out_deg,
            "in_degree": in_deg,
            "net_degree": out_deg - in_deg,
        }
    )
    order = np.argsort(-np.abs(table["net_degree"].to_numpy()), kind="stable")
    return table.iloc[order].reset_index(drop=True)


def top_k_edges(net: ConceptNet, k: int, direction: str = "strongest_out_per_node") -> ConceptNet:
    """Keep each node's ``k`` heaviest outgoing (or incoming) edges.

    Ties go to the earlier concept in node order.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if direction not in {"strongest_out_per_node", "strongest_in_per_node"}:
        raise ValueError(f"unknown direction {direction!r}")
    w = net.weights if direction == "strongest_out_per_node" else net.weights.T
    kept = np.zeros_like(w)
    for i in range(net.n):
        row = w[i]
        order = np.argsort(-row, kind="stable")[:k]
        order = order[row[order] > 0]
        kept[i, order] = row[order]
    if direction == "strongest_in_per_node":
        kept = kept.T
    return net.with_weights(kept)


def edge_list_frame(nets: Iterable[ConceptNet]) -> pd.DataFrame:
    rows = [
        {"stratum": net.stratum.label, "cause": c, "effect": e, "weight": w}
        for net in nets
        for c, e, w in net.edges()
    ]
    return pd.DataFrame(rows, columns=["stratum", "cause", "effect", "weight"])


def write_edge_list(nets: Iterable[ConceptNet], path: Union[str, Path]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    edge_list_frame(nets).to_csv(p, index=False, lineterminator="\n", float_format="%.10g")
    return p


def to_dot(net: ConceptNet, max_width: float = 8.0) -> str:
    """Graphviz DOT text; pen width scales with |weight|, negative edges in red."""
    g = nx.DiGraph(name=net.stratum.label)
    for i, concept in enumerate(net.nodes):
        g.add_node(f"n{i}", label=concept)
    peak = float(np.abs(net.weights).max()) if net.weights.size else 0.0
    for i, j in zip(*np.nonzero(net.weights)):
        w = float(net.weights[i, j])
        width = 1.0 + (max_width - 1.0) * abs(w) / peak if peak else 1.0
        g.add_edge(
            f"n{i}",
            f"n{j}",
            weight=f"{w:.6g}",
            penwidth=f"{width:.3f}",
            color="firebrick" if w < 0 else "black",
        )
    return nx.nx_pydot.to_pydot(g).to_string()


def write_dot(net: ConceptNet, path: Union[str, Path]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(to_dot(net), encoding="utf-8")
    return p


def save_networks(groups: Mapping[str, Sequence[ConceptNet]], path: Union[str, Path]) -> Path:
    """Persist network groups (``{"total": [...], "month": [...]}``) as JSON."""
    nodes: Optional[Tuple[str, ...]] = None
    payload: Dict[str, Any] = {"groups": {}}
    for name, nets in groups.items():
        for net in nets:
            if nodes is None:
                nodes = net.nodes
            elif net.nodes != nodes:
                raise GraphError(f"stratum {net.stratum.label}: node list differs")
        payload["groups"][name] = [net.to_dict() for net in nets]
    payload["nodes"] = list(nodes or ())
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    p.write_text(text + "\n", encoding="utf-8")
    return p


def load_networks(path: Union[str, Path]) -> Dict[str, List[ConceptNet]]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    nodes = data["nodes"]
    return {
        name: [
            ConceptNet(nodes, np.asarray(raw["weights"]), Stratum.from_dict(raw["stratum"]))
            for raw in nets
        ]
        for name, nets in data["groups"].items()
    }
