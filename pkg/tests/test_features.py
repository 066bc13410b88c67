from __future__ import annotations

import math
from datetime import datetime, timezone

import numpy as np
import pytest

from causalnet.core.corpus import MessageSet
from causalnet.core.errors import ConfigError, GraphError
from causalnet.core.extraction import CausalUnit, Connective
from causalnet.core.features import (
    BLOCKS,
    INTERCEPT,
    ModelFormula,
    build_features,
    design_matrix,
    hour_label,
    transitive_closure,
)
from causalnet.core.graph import build_networks
from causalnet.core.lexicon import CodedUnit, build_lexicon

from conftest import make_message

THEMES = {"A": "Threat", "B": "Disruption", "C": "Support"}
LEXICON = build_lexicon([], THEMES, reference_themes=("Threat", "Disruption"))
NODES = list(THEMES)


def coded(mid, cause, effect):
    unit = CausalUnit(mid, Connective.DUE_TO, "c", "e", connective_offset=2)
    return CodedUnit(unit, cause, effect, THEMES[cause], THEMES[effect])


def at(month, day=10, hour=12):
    return datetime(2020, month, day, hour, tzinfo=timezone.utc)


@pytest.fixture
def toy():
    """A used three times as a cause in January; two February messages."""
    messages = [
        make_message("j1", timestamp=at(1), retransmission_count=0),
        make_message("j2", timestamp=at(1, hour=3), retransmission_count=2),
        make_message("j3", timestamp=at(1, hour=23), retransmission_count=5),
        make_message("f1", timestamp=at(2), retransmission_count=1, follower_count=0),
        make_message("f2", timestamp=at(2, day=11), retransmission_count=4),
    ]
    units = [
        coded("j1", "A", "B"),
        coded("j2", "A", "B"),
        coded("j3", "A", "B"),
        coded("f1", "A", "C"),
        coded("f2", "B", "C"),
    ]
    msgs = MessageSet(messages=tuple(messages))
    (total,) = build_networks(units, msgs, "total", NODES)
    monthly = build_networks(units, msgs, "month", NODES)
    return units, msgs, total, monthly


def rows_by_id(table):
    return table.frame.set_index("message_id")


def test_cumulative_usage_strictly_before_the_message_month(toy):
    table = build_features(*toy, LEXICON)
    rows = rows_by_id(table)
    assert rows.loc["j1", "log_cum_cause_usage"] == 0.0
    assert rows.loc["j1", "log_cum_effect_usage"] == 0.0
    assert rows.loc["f1", "log_cum_cause_usage"] == pytest.approx(math.log(1 + 3))
    # C was never an effect before February
    assert rows.loc["f1", "log_cum_effect_usage"] == 0.0
    assert rows.loc["f2", "log_cum_cause_usage"] == 0.0


def test_cumulative_usage_through_the_message_month(toy):
    rows = rows_by_id(build_features(*toy, LEXICON, cum_window="through"))
    assert rows.loc["f1", "log_cum_cause_usage"] == pytest.approx(math.log(1 + 4))
    assert rows.loc["f1", "log_cum_effect_usage"] == pytest.approx(math.log(1 + 2))
    assert rows.loc["j1", "log_cum_cause_usage"] == pytest.approx(math.log(1 + 3))


def test_structural_terms_come_from_the_dichotomized_total(toy):
    rows = rows_by_id(build_features(*toy, LEXICON))
    # arcs A->B, A->C, B->C
    assert rows.loc["f1", "transitive_closure"] == 1
    assert rows.loc["j1", "transitive_closure"] == 0
    assert rows.loc["j1", "cause_in_degree"] == 0
    assert rows.loc["f2", "cause_in_degree"] == 1
    assert rows.loc["j1", "effect_out_degree"] == 1
    assert rows.loc["f2", "effect_out_degree"] == 0


def test_transitive_closure_needs_a_third_concept():
    a = np.zeros((3, 3), dtype=int)
    a[0, 1] = a[1, 2] = 1
    assert transitive_closure(a, 0, 2) == 1
    assert transitive_closure(a, 0, 1) == 0
    loop = np.array([[1, 1], [0, 0]])
    assert transitive_closure(loop, 0, 1) == 0


def test_controls_and_logs(toy):
    rows = rows_by_id(build_features(*toy, LEXICON))
    assert rows.loc["f1", "log_follower_count"] == 0.0
    assert rows.loc["j1", "log_follower_count"] == pytest.approx(math.log(101))
    assert rows.loc["j1", "day_of_week"] == "Friday"
    assert rows.loc["f2", "day_of_week"] == "Tuesday"
    assert rows.loc["j2", "hour_utc"] == 3
    assert rows.loc["f1", "months_elapsed"] == 2
    assert rows.loc["f1", "cause_theme"] == "Threat"


def test_funnel_counts_every_exclusion(toy):
    units, msgs, total, monthly = toy
    extra = (
        make_message("rt", timestamp=at(2), is_retransmission=True),
        make_message("old", timestamp=datetime(2019, 12, 1, tzinfo=timezone.utc)),
    )
    msgs = MessageSet(messages=msgs.messages + extra)
    units = units + [coded("rt", "A", "B"), coded("old", "A", "B")]
    table = build_features(units, msgs, total, monthly, LEXICON, uncoded_units=4)
    assert table.funnel == {
        "coded_units": 7,
        "uncoded_units": 4,
        "dropped_retransmissions": 1,
        "dropped_pre_epoch": 1,
        "rows": 5,
        "zero_retransmission_share": 0.2,
        "max_retransmissions": 5,
    }
    kept = build_features(units, msgs, total, monthly, LEXICON, originals_only=False)
    assert kept.funnel["rows"] == 6


def test_month_outside_network_range_is_an_error(toy):
    units, msgs, total, monthly = toy
    late = MessageSet(messages=msgs.messages + (make_message("late", timestamp=at(6)),))
    with pytest.raises(GraphError, match="outside network range"):
        build_features(units + [coded("late", "A", "B")], late, total, monthly, LEXICON)


def test_bad_window_and_missing_months(toy):
    units, msgs, total, monthly = toy
    with pytest.raises(ConfigError):
        build_features(units, msgs, total, monthly, LEXICON, cum_window="during")
    with pytest.raises(GraphError):
        build_features(units, msgs, total, [], LEXICON)


def test_formula_parsing():
    assert ModelFormula.parse(None).blocks == ModelFormula().blocks
    assert ModelFormula.parse("usage+structural").blocks == ("structural", "usage")
    assert ModelFormula.parse("themes").blocks == ("cause_theme", "effect_theme")
    assert str(ModelFormula.parse("structural+controls")) == (
        "structural+day_of_week+hour_utc+months_elapsed"
    )
    with pytest.raises(ConfigError, match="unknown formula block"):
        ModelFormula.parse("structural+vibes")


def test_design_matrix_orders_blocks_and_drops_constants(toy):
    table = build_features(*toy, LEXICON)
    design = design_matrix(table)
    assert design.names[0] == INTERCEPT
    assert design.names[1:3] == ["Cause In-Degree", "Effect Out-Degree"]
    # references never get a column
    assert "Cause Theme: Threat" not in design.names + design.dropped
    assert "Effect Theme: Disruption" not in design.names + design.dropped
    # every cause is A or B, so the Support cause dummy never varies
    assert "Cause Theme: Support" in design.dropped
    assert "Saturday" in design.dropped
    assert design.X.shape == (5, len(design.names))
    assert design.y.tolist() == [0, 2, 5, 1, 4]
    assert set(design.blocks.values()) <= {"intercept", *BLOCKS}


def test_design_matrix_without_controls(toy):
    table = build_features(*toy, LEXICON)
    design = design_matrix(table, ModelFormula.parse("structural"))
    assert design.names == [
        INTERCEPT,
        "Cause In-Degree",
        "Effect Out-Degree",
        "Log Follower Count",
        "Transitive Closure",
    ]


def test_hour_labels():
    assert hour_label(0) == "12 AM UTC"
    assert hour_label(1) == "1 AM UTC"
    assert hour_label(12) == "12 PM UTC"
    assert hour_label(23) == "11 PM UTC"
