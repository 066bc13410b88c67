"""Message-level regression features derived from the discourse networks.

Structural terms (cause in-degree, effect out-degree, transitive closure) are
read off the loopless dichotomized Total network; usage terms are cumulative
row/column sums of the valued monthly networks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import timezone
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .corpus import DEFAULT_EPOCH, MessageSet, filter_originals, month_bin
from .errors import ConfigError, GraphError
from .graph import ConceptNet
from .lexicon import CodedUnit, Lexicon
from .stats import adjacency

logger = logging.getLogger(__name__)

CUM_WINDOWS = ("before", "through")

# datetime.weekday() order; Sunday is the reference level
WEEKDAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")

STRUCTURAL_TERMS = (
    ("cause_in_degree", "Cause In-Degree"),
    ("effect_out_degree", "Effect Out-Degree"),
    ("log_follower_count", "Log Follower Count"),
    ("transitive_closure", "Transitive Closure"),
)
USAGE_TERMS = (
    ("log_cum_cause_usage", "Log of Cumulative Cause Usage"),
    ("log_cum_effect_usage", "Log of Cumulative Effect Usage"),
)
BLOCKS = (
    "structural",
    "usage",
    "cause_theme",
    "effect_theme",
    "day_of_week",
    "hour_utc",
    "months_elapsed",
)
CONTROL_BLOCKS = ("day_of_week", "hour_utc", "months_elapsed")
_ALIASES = {
    "all": BLOCKS,
    "themes": ("cause_theme", "effect_theme"),
    "controls": CONTROL_BLOCKS,
}
INTERCEPT = "(Intercept)"


def hour_label(hour: int) -> str:
    if hour == 0:
        return "12 AM UTC"
    if hour == 12:
        return "12 PM UTC"
    return f"{hour % 12} {'AM' if hour < 12 else 'PM'} UTC"


@dataclass
class FeatureTable:
    frame: pd.DataFrame
    themes: List[str]
    cause_reference: str
    effect_reference: str
    funnel: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def y(self) -> np.ndarray:
        return self.frame["y"].to_numpy(dtype=float)


@dataclass(frozen=True)
class ModelFormula:
    """Predictor blocks entering the design matrix, in table order."""

    blocks: Tuple[str, ...] = BLOCKS
    intercept: bool = True

    def __post_init__(self) -> None:
        unknown = [b for b in self.blocks if b not in BLOCKS]
        if unknown:
            raise ConfigError(f"unknown formula block(s): {', '.join(unknown)}")

    @classmethod
    def parse(cls, spec: Union[str, Sequence[str], None]) -> "ModelFormula":
        """Accept ``"all"``, ``"structural+usage+themes"`` or a list of block names."""
        if spec is None:
            return cls()
        parts = spec.split("+") if isinstance(spec, str) else list(spec)
        blocks: List[str] = []
        for part in (p.strip() for p in parts):
            if not part:
                continue
            for block in _ALIASES.get(part, (part,)):
                if block not in blocks:
                    blocks.append(block)
        # unknown names are kept so __post_init__ can reject them
        ordered = [b for b in BLOCKS if b in blocks] + [b for b in blocks if b not in BLOCKS]
        return cls(tuple(ordered))

    def __str__(self) -> str:
        return "+".join(self.blocks)


@dataclass
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray
    names: List[str]
    blocks: Dict[str, str]
    dropped: List[str] = field(default_factory=list)


def _usage_tables(
    monthly_nets: Sequence[ConceptNet],
) -> Tuple[Dict[int, int], np.ndarray, np.ndarray]:
    """Month -> row position plus stacked out- and in-strength per month."""
    months = [net.stratum.key for net in monthly_nets]
    if any(not isinstance(m, int) for m in months):
        raise GraphError("monthly networks must carry integer month keys")
    order = np.argsort(months, kind="stable")
    nets = [monthly_nets[i] for i in order]
    position = {int(net.stratum.key): i for i, net in enumerate(nets)}
    out_strength = np.vstack([net.weights.sum(axis=1) for net in nets]).astype(float)
    in_strength = np.vstack([net.weights.sum(axis=0) for net in nets]).astype(float)
    return position, out_strength, in_strength


def transitive_closure(a: np.ndarray, cause: int, effect: int) -> int:
    """1 when some third concept k has cause->k and k->effect."""
    via = a[cause, :].astype(bool) & a[:, effect].astype(bool)
    via[[cause, effect]] = False
    return int(via.any())


def build_features(
    coded: Iterable[CodedUnit],
    messages: MessageSet,
    total_net: ConceptNet,
    monthly_nets: Sequence[ConceptNet],
    lexicon: Lexicon,
    epoch: Union[str, Tuple[int, int]] = DEFAULT_EPOCH,
    originals_only: bool = True,
    cum_window: str = "before",
    uncoded_units: int = 0,
) -> FeatureTable:
    """One row per coded message, with a funnel of every exclusion."""
    if cum_window not in CUM_WINDOWS:
        raise ConfigError(f"cum_window must be one of {', '.join(CUM_WINDOWS)}")
    if not monthly_nets:
        raise GraphError("no monthly networks to compute usage from")
    nodes = total_net.nodes
    index = {c: i for i, c in enumerate(nodes)}
    a = adjacency(total_net)
    in_degree = a.sum(axis=0)
    out_degree = a.sum(axis=1)
    position, out_strength, in_strength = _usage_tables(monthly_nets)
    if monthly_nets[0].nodes != nodes:
        raise GraphError("monthly networks and the total network use different node lists")
    cum_out = np.cumsum(out_strength, axis=0)
    cum_in = np.cumsum(in_strength, axis=0)
    first_month, last_month = min(position), max(position)

    by_id = messages.by_id
    eligible = filter_originals(messages).by_id if originals_only else by_id
    rows: List[Dict[str, Any]] = []
    funnel: Dict[str, Any] = {
        "coded_units": 0,
        "uncoded_units": uncoded_units,
        "dropped_retransmissions": 0,
        "dropped_pre_epoch": 0,
    }
    for unit in coded:
        funnel["coded_units"] += 1
        msg = by_id.get(unit.message_id)
        if msg is None:
            raise GraphError(f"unit references unknown message {unit.message_id}")
        if msg.id not in eligible:
            funnel["dropped_retransmissions"] += 1
            continue
        try:
            month = month_bin(msg.timestamp, epoch)
        except ValueError:
            funnel["dropped_pre_epoch"] += 1
            continue
        if not first_month <= month <= last_month:
            raise GraphError(
                f"message {msg.id} month {month} outside network range {first_month}..{last_month}"
            )
        i, j = index[unit.cause_concept], index[unit.effect_concept]
        # months missing from the stratum list are empty, so cumulative sums carry over
        if cum_window == "through":
            upto: Optional[int] = max(p for m, p in position.items() if m <= month)
        else:
            earlier = [p for m, p in position.items() if m < month]
            upto = max(earlier) if earlier else None
        cause_usage = cum_out[upto, i] if upto is not None else 0.0
        effect_usage = cum_in[upto, j] if upto is not None else 0.0
        ts = msg.timestamp.astimezone(timezone.utc)
        rows.append(
            {
                "message_id": msg.id,
                "y": msg.retransmission_count,
                "cause_concept": unit.cause_concept,
                "effect_concept": unit.effect_concept,
                "cause_in_degree": int(in_degree[i]),
                "effect_out_degree": int(out_degree[j]),
                "transitive_closure": transitive_closure(a, i, j),
                "log_cum_cause_usage": float(np.log1p(cause_usage)),
                "log_cum_effect_usage": float(np.log1p(effect_usage)),
                "cause_theme": unit.cause_theme,
                "effect_theme": unit.effect_theme,
                "log_follower_count": float(np.log1p(msg.follower_count)),
                "day_of_week": WEEKDAYS[ts.weekday()],
                "hour_utc": ts.hour,
                "months_elapsed": month,
            }
        )

    frame = pd.DataFrame(rows, columns=_COLUMNS)
    y = frame["y"].to_numpy()
    funnel["rows"] = len(frame)
    funnel["zero_retransmission_share"] = float((y == 0).mean()) if len(y) else None
    funnel["max_retransmissions"] = int(y.max()) if len(y) else None
    logger.info(
        "feature table: %d row(s) from %d unit(s); dropped %d retransmission(s), %d pre-epoch",
        funnel["rows"],
        funnel["coded_units"],
        funnel["dropped_retransmissions"],
        funnel["dropped_pre_epoch"],
    )
    return FeatureTable(
        frame=frame,
        themes=list(lexicon.themes),
        cause_reference=lexicon.cause_reference,
        effect_reference=lexicon.effect_reference,
        funnel=funnel,
    )


_COLUMNS = [
    "message_id",
    "y",
    "cause_concept",
    "effect_concept",
    "cause_in_degree",
    "effect_out_degree",
    "transitive_closure",
    "log_cum_cause_usage",
    "log_cum_effect_usage",
    "cause_theme",
    "effect_theme",
    "log_follower_count",
    "day_of_week",
    "hour_utc",
    "months_elapsed",
]


def _dummies(
    values: pd.Series, levels: Sequence[Any], labels: Sequence[str]
) -> Dict[str, np.ndarray]:
    return {label: (values == level).to_numpy(dtype=float) for level, label in zip(levels, labels)}


def design_matrix(table: FeatureTable, formula: Optional[ModelFormula] = None) -> DesignMatrix:
    """Assemble X in coefficient-table order.

    Non-intercept columns that are constant over the rows (e.g. a theme no
    message uses) are dropped and listed in ``dropped``.
    """
    formula = formula or ModelFormula()
    f = table.frame
    columns: Dict[str, np.ndarray] = {}
    blocks: Dict[str, str] = {}

    def add(block: str, cols: Dict[str, np.ndarray]) -> None:
        for name, values in cols.items():
            columns[name] = values
            blocks[name] = block

    if formula.intercept:
        add("intercept", {INTERCEPT: np.ones(len(f))})
    for block in formula.blocks:
        if block == "structural":
            add(block, {label: f[col].to_numpy(dtype=float) for col, label in STRUCTURAL_TERMS})
        elif block == "usage":
            add(block, {label: f[col].to_numpy(dtype=float) for col, label in USAGE_TERMS})
        elif block in ("cause_theme", "effect_theme"):
            reference = table.cause_reference if block == "cause_theme" else table.effect_reference
            prefix = "Cause Theme" if block == "cause_theme" else "Effect Theme"
            levels = [t for t in table.themes if t != reference]
            add(block, _dummies(f[block], levels, [f"{prefix}: {t}" for t in levels]))
        elif block == "day_of_week":
            levels = list(WEEKDAYS[:-1])
            add(block, _dummies(f[block], levels, levels))
        elif block == "hour_utc":
            hours = list(range(1, 24))
            add(block, _dummies(f[block], hours, [hour_label(h) for h in hours]))
        elif block == "months_elapsed":
            add(block, {"Num. of Months": f["months_elapsed"].to_numpy(dtype=float)})

    dropped = [
        name
        for name, values in columns.items()
        if name != INTERCEPT and len(values) and np.all(values == values[0])
    ]
    if dropped:
        logger.info("dropping %d constant column(s): %s", len(dropped), ", ".join(dropped))
    names = [n for n in columns if n not in dropped]
    X = np.column_stack([columns[n] for n in names]) if names else np.empty((len(f), 0))
    return DesignMatrix(
        X=X,
        y=table.y,
        names=names,
        blocks={n: blocks[n] for n in names},
        dropped=dropped,
    )
