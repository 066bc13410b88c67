"""Causal connective detection and cause/effect splitting.

A message ``"<effect> due to <cause>"`` yields one unit. For all three
connectives the text before the connective is the effect and the text after
it is the cause. Connectives opening a sentence are never split, since the
"Due to B, A" form has no reliable cause/effect boundary.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Tuple, Union

from .corpus import Message

logger = logging.getLogger(__name__)


class Connective(str, Enum):
    DUE_TO = "due_to"
    BECAUSE_OF = "because_of"
    CAUSED_BY = "caused_by"

    @property
    def phrase(self) -> str:
        return self.value.replace("_", " ")


class SkipReason(str, Enum):
    NO_CONNECTIVE = "no_connective"
    SENTENCE_INITIAL = "sentence_initial"
    EMPTY_EFFECT = "empty_effect"
    EMPTY_CAUSE = "empty_cause"


MULTI_CONNECTIVE = "multi_connective"

_CONNECTIVE_RE = re.compile(
    r"(?<!\w)(?:(due)\s+to|(because)\s+of|(caused)\s+by)(?!\w)",
    re.IGNORECASE | re.UNICODE,
)
_HEAD_TO_CONNECTIVE = {
    "due": Connective.DUE_TO,
    "because": Connective.BECAUSE_OF,
    "caused": Connective.CAUSED_BY,
}
_SENTENCE_END = ".!?"
_CLOSERS = "\"')]}”’»"
_WORD = re.compile(r"\w", re.UNICODE)


@dataclass(frozen=True)
class CausalUnit:
    message_id: str
    connective: Connective
    cause_text: str
    effect_text: str
    connective_offset: int
    connective_text: str = ""
    effect_start: int = 0
    cause_end: int = 0
    flags: Tuple[str, ...] = ()

    def to_record(self) -> Dict[str, Any]:
        return {
            "message_id": self.message_id,
            "connective": self.connective.value,
            "cause_text": self.cause_text,
            "effect_text": self.effect_text,
            "connective_offset": self.connective_offset,
            "connective_text": self.connective_text,
            "effect_start": self.effect_start,
            "cause_end": self.cause_end,
            "flags": list(self.flags),
        }

    @classmethod
    def from_record(cls, rec: Dict[str, Any]) -> "CausalUnit":
        offset = int(rec.get("connective_offset", 0))
        return cls(
            message_id=str(rec["message_id"]),
            connective=Connective(rec["connective"]),
            cause_text=rec["cause_text"],
            effect_text=rec["effect_text"],
            connective_offset=offset,
            connective_text=rec.get("connective_text", ""),
            effect_start=int(rec.get("effect_start", 0)),
            cause_end=int(rec.get("cause_end", 0)),
            flags=tuple(rec.get("flags", ())),
        )

    @property
    def multi_connective(self) -> bool:
        return MULTI_CONNECTIVE in self.flags


@dataclass(frozen=True)
class Skip:
    message_id: str
    reason: SkipReason

    def to_record(self) -> Dict[str, Any]:
        return {"message_id": self.message_id, "reason": self.reason.value}


def find_connectives(text: str) -> List[Tuple[Connective, Tuple[int, int]]]:
    """All whole-word, case-insensitive connective matches, left to right."""
    found = []
    for match in _CONNECTIVE_RE.finditer(text):
        head = next(g for g in match.groups() if g is not None).lower()
        found.append((_HEAD_TO_CONNECTIVE[head], match.span()))
    return found


def is_sentence_start(text: str, offset: int) -> bool:
    """True at text start or right after ``.``/``!``/``?``, skipping whitespace
    and closing quotes/brackets."""
    prefix = text[:offset].rstrip()
    while prefix and prefix[-1] in _CLOSERS:
        prefix = prefix[:-1].rstrip()
    return not prefix or prefix[-1] in _SENTENCE_END


def _split(message_id: str, text: str, connective: Connective, span: Tuple[int, int], flags):
    start, end = span
    if is_sentence_start(text, start):
        return SkipReason.SENTENCE_INITIAL
    before, after = text[:start], text[end:]
    effect = before.strip()
    cause = after.strip()
    if not _WORD.search(effect):
        return SkipReason.EMPTY_EFFECT
    if not _WORD.search(cause):
        return SkipReason.EMPTY_CAUSE
    effect_start = len(before) - len(before.lstrip())
    cause_end = end + len(after.rstrip())
    return CausalUnit(
        message_id=message_id,
        connective=connective,
        cause_text=cause,
        effect_text=effect,
        connective_offset=start,
        connective_text=text[start:end],
        effect_start=effect_start,
        cause_end=cause_end,
        flags=flags,
    )


def extract_unit(message: Message) -> Union[CausalUnit, Skip]:
    """Split a message at its first eligible connective.

    When no connective is eligible the skip reason is the one the first
    connective failed on.
    """
    matches = find_connectives(message.text)
    if not matches:
        return Skip(message.id, SkipReason.NO_CONNECTIVE)
    flags: Tuple[str, ...] = (MULTI_CONNECTIVE,) if len(matches) > 1 else ()
    first_failure = None
    for connective, span in matches:
        result = _split(message.id, message.text, connective, span, flags)
        if isinstance(result, CausalUnit):
            return result
        first_failure = first_failure or result
    return Skip(message.id, first_failure or SkipReason.NO_CONNECTIVE)


def extract_all(messages: Iterable[Message]) -> Tuple[List[CausalUnit], List[Skip]]:
    units: List[CausalUnit] = []
    skips: List[Skip] = []
    for m in messages:
        result = extract_unit(m)
        if isinstance(result, CausalUnit):
            units.append(result)
        else:
            skips.append(result)
    logger.info("extracted %d unit(s), skipped %d message(s)", len(units), len(skips))
    return units, skips


@dataclass
class ExtractionReport:
    messages: int = 0
    units: int = 0
    by_connective: Dict[str, int] = field(default_factory=dict)
    skips: Dict[str, int] = field(default_factory=dict)
    multi_connective: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "messages": self.messages,
            "units": self.units,
            "by_connective": dict(self.by_connective),
            "skips": dict(self.skips),
            "multi_connective": self.multi_connective,
        }


def extraction_report(messages: Iterable[Message]) -> ExtractionReport:
    """Funnel counts: every message lands in exactly one of units or a skip reason."""
    report = ExtractionReport(
        by_connective={c.value: 0 for c in Connective},
        skips={r.value: 0 for r in SkipReason},
    )
    connectives: Counter[str] = Counter()
    reasons: Counter[str] = Counter()
    for m in messages:
        report.messages += 1
        result = extract_unit(m)
        if isinstance(result, CausalUnit):
            report.units += 1
            connectives[result.connective.value] += 1
            if result.multi_connective:
                report.multi_connective += 1
        else:
            reasons[result.reason.value] += 1
    report.by_connective.update(connectives)
    report.skips.update(reasons)
    return report
