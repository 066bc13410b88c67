"""Message corpus ingestion, validation and month binning.

Corpora are JSONL (canonical, one message per line) or CSV with the same
column names. Bad records are rejected one at a time with their line number;
only an unreadable file aborts the load.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Tuple

from .errors import CorpusError

logger = logging.getLogger(__name__)

FIELDS = (
    "id",
    "text",
    "timestamp",
    "account_id",
    "account_role",
    "follower_count",
    "retransmission_count",
    "is_retransmission",
)

DEFAULT_EPOCH = "2020-01"


class AccountRole(str, Enum):
    PUBLIC_HEALTH = "public_health"
    STATE_FED_EM = "state_fed_em"
    LOCAL_EM = "local_em"
    GOVERNOR = "governor"
    MAYOR = "mayor"

    @property
    def group(self) -> str:
        """Three-way grouping: health agencies, emergency management, electeds."""
        return _ROLE_GROUPS[self]


_ROLE_GROUPS = {
    AccountRole.PUBLIC_HEALTH: "health",
    AccountRole.STATE_FED_EM: "emergency_management",
    AccountRole.LOCAL_EM: "emergency_management",
    AccountRole.GOVERNOR: "elected",
    AccountRole.MAYOR: "elected",
}

ROLE_GROUPS = ("health", "emergency_management", "elected")


@dataclass(frozen=True)
class Message:
    id: str
    text: str
    timestamp: datetime
    account_id: str
    account_role: AccountRole
    follower_count: int
    retransmission_count: int
    is_retransmission: bool

    def to_record(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "text": self.text,
            "timestamp": format_timestamp(self.timestamp),
            "account_id": self.account_id,
            "account_role": self.account_role.value,
            "follower_count": self.follower_count,
            "retransmission_count": self.retransmission_count,
            "is_retransmission": self.is_retransmission,
        }


@dataclass(frozen=True)
class Rejection:
    line: int
    reason: str
    record_id: Optional[str] = None


@dataclass(frozen=True)
class MessageSet:
    messages: Tuple[Message, ...] = ()
    rejections: Tuple[Rejection, ...] = ()
    source: Optional[str] = None

    def __len__(self) -> int:
        return len(self.messages)

    def __iter__(self) -> Iterator[Message]:
        return iter(self.messages)

    def __getitem__(self, idx: int) -> Message:
        return self.messages[idx]

    @cached_property
    def by_id(self) -> Mapping[str, Message]:
        return {m.id: m for m in self.messages}

    def subset(self, messages: Iterable[Message]) -> "MessageSet":
        return MessageSet(messages=tuple(messages), source=self.source)


class RecordError(ValueError):
    pass


def parse_timestamp(raw: Any) -> datetime:
    if not isinstance(raw, str) or not raw.strip():
        raise RecordError("invalid timestamp")
    text = raw.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError:
        raise RecordError(f"invalid timestamp {raw!r}")
    if ts.tzinfo is None or ts.utcoffset() is None:
        raise RecordError(f"timestamp {raw!r} lacks a UTC offset")
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _as_count(name: str, raw: Any) -> int:
    if isinstance(raw, bool):
        raise RecordError(f"invalid {name}")
    if isinstance(raw, str):
        raw = raw.strip()
        if not raw.lstrip("-").isdigit():
            raise RecordError(f"invalid {name}")
        raw = int(raw)
    if isinstance(raw, float) and raw.is_integer():
        raw = int(raw)
    if not isinstance(raw, int):
        raise RecordError(f"invalid {name}")
    if raw < 0:
        raise RecordError(f"negative {name}")
    return raw


def _as_bool(raw: Any) -> bool:
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, int) and raw in (0, 1):
        return bool(raw)
    if isinstance(raw, str):
        lowered = raw.strip().lower()
        if lowered in {"true", "1", "yes"}:
            return True
        if lowered in {"false", "0", "no"}:
            return False
    raise RecordError("invalid is_retransmission")


def message_from_record(rec: Mapping[str, Any]) -> Message:
    for name in FIELDS:
        value = rec.get(name)
        if value is None or (name != "text" and isinstance(value, str) and not value.strip()):
            raise RecordError(f"missing field {name}")
    msg_id = str(rec["id"]).strip()
    text = rec["text"]
    if not isinstance(text, str):
        raise RecordError("invalid text")
    try:
        role = AccountRole(str(rec["account_role"]).strip())
    except ValueError:
        raise RecordError(f"invalid account_role {rec['account_role']!r}")
    return Message(
        id=msg_id,
        text=text,
        timestamp=parse_timestamp(rec["timestamp"]),
        account_id=str(rec["account_id"]).strip(),
        account_role=role,
        follower_count=_as_count("follower_count", rec["follower_count"]),
        retransmission_count=_as_count("retransmission_count", rec["retransmission_count"]),
        is_retransmission=_as_bool(rec["is_retransmission"]),
    )


def _iter_jsonl(path: Path) -> Iterator[Tuple[int, Any]]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as e:
                yield lineno, RecordError(f"malformed JSON: {e.msg}")


def _iter_csv(path: Path) -> Iterator[Tuple[int, Any]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [f for f in FIELDS if f not in (reader.fieldnames or [])]
        if missing:
            raise CorpusError(f"{path}: CSV header lacks columns {', '.join(missing)}")
        for row in reader:
            # header is line 1; quoted newlines make this approximate only in odd files
            yield reader.line_num, row


def load_corpus(path: str | Path, fmt: Optional[str] = None) -> MessageSet:
    """Load a corpus, rejecting malformed records individually.

    ``fmt`` is ``"jsonl"`` or ``"csv"``; when omitted it is inferred from the
    file suffix.
    """
    p = Path(path)
    fmt = (fmt or ("csv" if p.suffix.lower() == ".csv" else "jsonl")).lower()
    if fmt not in {"jsonl", "csv"}:
        raise CorpusError(f"unsupported corpus format {fmt!r}")
    if not p.is_file():
        raise CorpusError(f"corpus file not found: {p}")

    messages: List[Message] = []
    rejections: List[Rejection] = []
    seen: set[str] = set()
    rows = _iter_jsonl(p) if fmt == "jsonl" else _iter_csv(p)
    try:
        for lineno, rec in rows:
            if isinstance(rec, RecordError):
                rejections.append(Rejection(lineno, str(rec)))
                continue
            if not isinstance(rec, dict):
                rejections.append(Rejection(lineno, "record is not an object"))
                continue
            try:
                msg = message_from_record(rec)
            except RecordError as e:
                rid = rec.get("id")
                rejections.append(Rejection(lineno, str(e), str(rid) if rid is not None else None))
                continue
            if msg.id in seen:
                rejections.append(Rejection(lineno, "duplicate id", msg.id))
                continue
            seen.add(msg.id)
            messages.append(msg)
    except (OSError, UnicodeDecodeError) as e:
        raise CorpusError(f"cannot read corpus {p}: {e}") from e

    for rej in rejections:
        logger.debug("rejected line %d: %s", rej.line, rej.reason)
    if rejections:
        logger.warning("%s: %d record(s) rejected, %d accepted", p, len(rejections), len(messages))
    else:
        logger.info("%s: %d messages loaded", p, len(messages))
    return MessageSet(messages=tuple(messages), rejections=tuple(rejections), source=str(p))


def dump_corpus(messages: Iterable[Message], path: str | Path, fmt: str = "jsonl") -> Path:
    """Write messages in canonical form (fixed key order, UTC ``Z`` timestamps)."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "jsonl":
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            for m in messages:
                fh.write(json.dumps(m.to_record(), ensure_ascii=False, separators=(",", ":")))
                fh.write("\n")
    elif fmt == "csv":
        with open(p, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(FIELDS), lineterminator="\n")
            writer.writeheader()
            for m in messages:
                rec = m.to_record()
                rec["is_retransmission"] = "true" if m.is_retransmission else "false"
                writer.writerow(rec)
    else:
        raise CorpusError(f"unsupported corpus format {fmt!r}")
    return p


def parse_epoch(epoch: str | Tuple[int, int]) -> Tuple[int, int]:
    if isinstance(epoch, tuple):
        year, month = epoch
    else:
        try:
            year_s, month_s = str(epoch).strip().split("-")[:2]
            year, month = int(year_s), int(month_s)
        except ValueError:
            raise ValueError(f"invalid epoch {epoch!r}; expected YYYY-MM")
    if not 1 <= month <= 12:
        raise ValueError(f"invalid epoch month in {epoch!r}")
    return year, month


def month_bin(timestamp: datetime, epoch: str | Tuple[int, int] = DEFAULT_EPOCH) -> int:
    """1-based month offset of ``timestamp`` from the epoch month (UTC)."""
    year, month = parse_epoch(epoch)
    ts = timestamp.astimezone(timezone.utc) if timestamp.tzinfo else timestamp
    index = 12 * (ts.year - year) + (ts.month - month) + 1
    if index < 1:
        raise ValueError("pre-epoch message")
    return index


def month_label(index: int, epoch: str | Tuple[int, int] = DEFAULT_EPOCH) -> str:
    year, month = parse_epoch(epoch)
    offset = (month - 1) + (index - 1)
    return f"{year + offset // 12:04d}-{offset % 12 + 1:02d}"


def filter_originals(messages: MessageSet) -> MessageSet:
    return messages.subset(m for m in messages if not m.is_retransmission)


def partition_by_month(
    messages: MessageSet, epoch: str | Tuple[int, int] = DEFAULT_EPOCH
) -> Dict[int, List[Message]]:
    """Group in-window messages by month index; pre-epoch messages are left out."""
    parts: Dict[int, List[Message]] = {}
    for m in messages:
        try:
            idx = month_bin(m.timestamp, epoch)
        except ValueError:
            continue
        parts.setdefault(idx, []).append(m)
    return dict(sorted(parts.items()))


@dataclass(frozen=True)
class CorpusSummary:
    accepted: int
    rejected: int
    reasons: Dict[str, int] = field(default_factory=dict)


def summarize(messages: MessageSet) -> CorpusSummary:
    reasons: Dict[str, int] = {}
    for rej in messages.rejections:
        key = re.sub(r"\s*'[^']*'", "", rej.reason).split(":")[0]
        reasons[key] = reasons.get(key, 0) + 1
    return CorpusSummary(
        len(messages.messages), len(messages.rejections), dict(sorted(reasons.items()))
    )
