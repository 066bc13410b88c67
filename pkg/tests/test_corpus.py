from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone

import pytest

from causalnet.core.corpus import (
    AccountRole,
    MessageSet,
    dump_corpus,
    filter_originals,
    load_corpus,
    month_bin,
    month_label,
    partition_by_month,
    summarize,
)
from causalnet.core.errors import CorpusError

from conftest import make_message, record, write_jsonl


def test_load_valid_jsonl_keeps_file_order(tmp_path):
    path = write_jsonl(tmp_path / "c.jsonl", [record(id=f"m{i}") for i in (3, 1, 2)])
    messages = load_corpus(path)
    assert [m.id for m in messages] == ["m3", "m1", "m2"]
    assert messages.rejections == ()
    assert messages[0].account_role is AccountRole.LOCAL_EM
    assert messages[0].timestamp.tzinfo is not None


def test_missing_timestamp_is_rejected(tmp_path):
    bad = record(id="m2")
    del bad["timestamp"]
    path = write_jsonl(tmp_path / "c.jsonl", [record(id="m1"), bad])
    messages = load_corpus(path)
    assert len(messages) == 1
    (rej,) = messages.rejections
    assert rej.line == 2
    assert rej.reason == "missing field timestamp"
    assert rej.record_id == "m2"


def test_duplicate_id_rejects_later_record(tmp_path):
    recs = [record(id=i) for i in ("a", "dup", "b", "c", "dup")]
    messages = load_corpus(write_jsonl(tmp_path / "c.jsonl", recs))
    assert [m.id for m in messages] == ["a", "dup", "b", "c"]
    (rej,) = messages.rejections
    assert (rej.line, rej.reason) == (5, "duplicate id")


@pytest.mark.parametrize(
    "overrides, reason",
    [
        ({"timestamp": "2020-03-15T12:00:00"}, "lacks a UTC offset"),
        ({"timestamp": "yesterday"}, "invalid timestamp"),
        ({"follower_count": -1}, "negative follower_count"),
        ({"retransmission_count": "many"}, "invalid retransmission_count"),
        ({"account_role": "sheriff"}, "invalid account_role"),
        ({"is_retransmission": "maybe"}, "invalid is_retransmission"),
        ({"id": ""}, "missing field id"),
    ],
)
def test_record_validation(tmp_path, overrides, reason):
    messages = load_corpus(write_jsonl(tmp_path / "c.jsonl", [record(**overrides)]))
    assert len(messages) == 0
    assert reason in messages.rejections[0].reason


def test_malformed_json_line_is_a_rejection_not_a_failure(tmp_path):
    path = write_jsonl(tmp_path / "c.jsonl", [record(id="a"), "{not json", record(id="b")])
    messages = load_corpus(path)
    assert [m.id for m in messages] == ["a", "b"]
    assert messages.rejections[0].line == 2
    assert messages.rejections[0].reason.startswith("malformed JSON")


def test_unreadable_file_is_fatal(tmp_path):
    with pytest.raises(CorpusError):
        load_corpus(tmp_path / "nope.jsonl")


def test_csv_round_trip_matches_jsonl(tmp_path):
    messages = load_corpus(
        write_jsonl(tmp_path / "c.jsonl", [record(id="a"), record(id="b", is_retransmission=True)])
    )
    csv_path = dump_corpus(messages, tmp_path / "c.csv", "csv")
    again = load_corpus(csv_path)
    assert again.messages == messages.messages


def test_csv_header_must_have_every_field(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("id,text\n1,hello\n", encoding="utf-8")
    with pytest.raises(CorpusError, match="lacks columns"):
        load_corpus(path)


def test_offset_timestamps_are_normalized_to_utc(tmp_path):
    path = write_jsonl(tmp_path / "c.jsonl", [record(timestamp="2020-01-31T22:00:00-05:00")])
    (msg,) = load_corpus(path)
    assert msg.timestamp == datetime(2020, 2, 1, 3, 0, tzinfo=timezone.utc)
    assert month_bin(msg.timestamp) == 2


@pytest.mark.parametrize(
    "ts, expected",
    [
        (datetime(2020, 1, 15, tzinfo=timezone.utc), 1),
        (datetime(2021, 3, 31, 23, 59, 59, tzinfo=timezone.utc), 15),
        (datetime(2020, 2, 1, tzinfo=timezone.utc), 2),
        (datetime(2020, 12, 31, 23, 59, 59, tzinfo=timezone.utc), 12),
    ],
)
def test_month_bin(ts, expected):
    assert month_bin(ts) == expected


def test_month_bin_rejects_pre_epoch():
    with pytest.raises(ValueError, match="pre-epoch message"):
        month_bin(datetime(2019, 12, 31, 23, 59, 59, tzinfo=timezone.utc))


def test_month_bin_honours_epoch_and_labels_round_trip():
    ts = datetime(2021, 3, 1, tzinfo=timezone.utc)
    assert month_bin(ts, "2020-03") == 13
    assert month_label(13, "2020-03") == "2021-03"
    assert month_label(1) == "2020-01"
    assert month_label(15) == "2021-03"


def test_filter_originals_preserves_order():
    msgs = MessageSet(
        messages=(
            make_message("o1"),
            make_message("rt", is_retransmission=True),
            make_message("o2"),
        )
    )
    assert [m.id for m in filter_originals(msgs)] == ["o1", "o2"]


def test_partition_by_month_skips_pre_epoch():
    base = datetime(2020, 1, 31, tzinfo=timezone.utc)
    msgs = MessageSet(
        messages=(
            make_message("early", timestamp=base - timedelta(days=40)),
            make_message("jan", timestamp=base),
            make_message("feb", timestamp=base + timedelta(days=1)),
        )
    )
    parts = partition_by_month(msgs)
    assert list(parts) == [1, 2]
    assert [m.id for m in parts[1]] == ["jan"]


def test_summarize_groups_rejection_reasons(tmp_path):
    recs = [record(id="a"), record(id="a"), record(id="b", account_role="x")]
    summary = summarize(load_corpus(write_jsonl(tmp_path / "c.jsonl", recs)))
    assert summary.accepted == 1
    assert summary.rejected == 2
    assert summary.reasons == {"duplicate id": 1, "invalid account_role": 1}


def test_role_groups_cover_every_role():
    assert {r.group for r in AccountRole} == {"health", "emergency_management", "elected"}
    assert AccountRole.MAYOR.group == AccountRole.GOVERNOR.group == "elected"


def test_message_record_is_json_ready():
    rec = make_message().to_record()
    assert json.loads(json.dumps(rec))["timestamp"] == "2020-03-15T12:00:00Z"
