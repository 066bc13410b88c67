"""Ordered keyword lexicon mapping cause/effect subparts to concepts and themes.

Lexicon files are TOML::

    theme_list = ["Primary Threat", "Transitions and Shifts"]

    [reference_themes]
    cause = "Primary Threat"
    effect = "Disruptions"        # a theme, or a concept standing for its theme

    [themes]                      # concept -> theme; key order is the node order
    "Primary Threat" = "Primary Threat"
    "Disruptions" = "Transitions and Shifts"

    [[rules]]
    pattern = '\\bclos(?:ed|ures?)\\b'
    concept = "Disruptions"
    side = "effect"               # cause | effect | both (default both)
    priority = 5                  # optional; defaults to file position

Rules are tried in ascending priority (ties keep file order); the first rule
whose side matches wins.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib  # type: ignore[no-redef]

from .errors import LexiconError
from .extraction import CausalUnit

logger = logging.getLogger(__name__)

DEFAULT_CAUSE_REFERENCE = "Secondary Threats"
DEFAULT_EFFECT_REFERENCE = "Disruptions"
DEMO_LEXICON = "demo_lexicon.toml"


class Side(str, Enum):
    CAUSE = "cause"
    EFFECT = "effect"
    BOTH = "both"


@dataclass(frozen=True)
class LexiconRule:
    pattern: str
    concept: str
    side: Side = Side.BOTH
    priority: int = 0
    regex: re.Pattern = field(default=None, repr=False, compare=False)  # type: ignore[assignment]

    def applies_to(self, side: Side) -> bool:
        return self.side is Side.BOTH or self.side is side

    def matches(self, text: str) -> bool:
        return self.regex.search(text) is not None


@dataclass(frozen=True)
class Lexicon:
    rules: Tuple[LexiconRule, ...]
    theme_map: Mapping[str, str]
    reference_themes: Tuple[str, str] = (DEFAULT_CAUSE_REFERENCE, DEFAULT_EFFECT_REFERENCE)
    theme_list: Tuple[str, ...] = ()
    source: Optional[str] = None

    @property
    def concepts(self) -> List[str]:
        """Concept order shared by every network built from this lexicon."""
        return list(self.theme_map)

    @property
    def themes(self) -> List[str]:
        return list(self.theme_list)

    def theme_of(self, concept: str) -> str:
        return self.theme_map[concept]

    def resolve_theme(self, name: str) -> str:
        """A declared theme, or the theme of a concept named in its place."""
        if name in self.theme_list:
            return name
        if name in self.theme_map:
            return self.theme_map[name]
        raise LexiconError(f"unknown reference theme {name}")

    @property
    def cause_reference(self) -> str:
        return self.resolve_theme(self.reference_themes[0])

    @property
    def effect_reference(self) -> str:
        return self.resolve_theme(self.reference_themes[1])


@dataclass(frozen=True)
class CodedUnit:
    unit: CausalUnit
    cause_concept: str
    effect_concept: str
    cause_theme: str
    effect_theme: str

    @property
    def message_id(self) -> str:
        return self.unit.message_id

    def to_record(self) -> Dict[str, Any]:
        rec = self.unit.to_record()
        rec.update(
            cause_concept=self.cause_concept,
            effect_concept=self.effect_concept,
            cause_theme=self.cause_theme,
            effect_theme=self.effect_theme,
        )
        return rec

    @classmethod
    def from_record(cls, rec: Dict[str, Any]) -> "CodedUnit":
        return cls(
            unit=CausalUnit.from_record(rec),
            cause_concept=rec["cause_concept"],
            effect_concept=rec["effect_concept"],
            cause_theme=rec["cause_theme"],
            effect_theme=rec["effect_theme"],
        )


@dataclass(frozen=True)
class Uncoded:
    unit: CausalUnit
    failed: Tuple[Side, ...]


def _compile_rule(raw: Mapping[str, Any], position: int) -> LexiconRule:
    pattern = raw.get("pattern")
    concept = raw.get("concept")
    if not isinstance(pattern, str) or not pattern:
        raise LexiconError(f"rule {position + 1}: missing pattern")
    if not isinstance(concept, str) or not concept.strip():
        raise LexiconError(f"rule {position + 1} ({pattern!r}): missing concept")
    try:
        side = Side(str(raw.get("side", "both")).lower())
    except ValueError:
        raise LexiconError(f"rule {position + 1} ({pattern!r}): invalid side {raw.get('side')!r}")
    try:
        regex = re.compile(pattern, re.IGNORECASE | re.UNICODE)
    except re.error as e:
        raise LexiconError(f"rule {position + 1} ({pattern!r}): invalid pattern: {e}") from e
    priority = raw.get("priority", position)
    if not isinstance(priority, int) or isinstance(priority, bool):
        raise LexiconError(f"rule {position + 1} ({pattern!r}): priority must be an integer")
    return LexiconRule(
        pattern=pattern, concept=concept.strip(), side=side, priority=priority, regex=regex
    )


def build_lexicon(
    rules: Sequence[Mapping[str, Any]],
    theme_map: Mapping[str, str],
    reference_themes: Tuple[str, str] = (DEFAULT_CAUSE_REFERENCE, DEFAULT_EFFECT_REFERENCE),
    theme_list: Optional[Sequence[str]] = None,
    source: Optional[str] = None,
) -> Lexicon:
    """Validate and assemble a lexicon from plain data."""
    compiled = [_compile_rule(r, i) for i, r in enumerate(rules)]
    seen: set[Tuple[str, Side]] = set()
    for rule in compiled:
        key = (rule.pattern, rule.side)
        if key in seen:
            raise LexiconError(f"duplicate rule {rule.pattern!r} for side {rule.side.value}")
        seen.add(key)

    themes = tuple(theme_list) if theme_list else tuple(dict.fromkeys(theme_map.values()))
    for concept, theme in theme_map.items():
        if theme not in themes:
            raise LexiconError(f"concept {concept} maps to undeclared theme {theme}")
    for rule in compiled:
        if rule.concept not in theme_map:
            raise LexiconError(f"unmapped concept {rule.concept}")

    ordered = tuple(
        r for _, r in sorted(enumerate(compiled), key=lambda pair: (pair[1].priority, pair[0]))
    )
    lexicon = Lexicon(
        rules=ordered,
        theme_map=dict(theme_map),
        reference_themes=(reference_themes[0], reference_themes[1]),
        theme_list=themes,
        source=source,
    )
    # fail at load time, not at regression time
    _ = (lexicon.cause_reference, lexicon.effect_reference)
    return lexicon


def load_lexicon(path: Union[str, Path]) -> Lexicon:
    p = Path(path)
    try:
        with open(p, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as e:
        raise LexiconError(f"cannot read lexicon {p}: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise LexiconError(f"{p}: {e}") from e

    theme_map = data.get("themes")
    if not isinstance(theme_map, dict) or not theme_map:
        raise LexiconError(f"{p}: missing [themes] section")
    refs = data.get("reference_themes") or {}
    lexicon = build_lexicon(
        rules=data.get("rules") or [],
        theme_map={str(k): str(v) for k, v in theme_map.items()},
        reference_themes=(
            refs.get("cause", DEFAULT_CAUSE_REFERENCE),
            refs.get("effect", DEFAULT_EFFECT_REFERENCE),
        ),
        theme_list=data.get("theme_list"),
        source=str(p),
    )
    logger.info(
        "lexicon %s: %d rules, %d concepts, %d themes",
        p.name,
        len(lexicon.rules),
        len(lexicon.concepts),
        len(lexicon.theme_list),
    )
    return lexicon


def demo_lexicon_path() -> Path:
    return Path(str(resources.files("causalnet").joinpath("data", DEMO_LEXICON)))


def load_demo_lexicon() -> Lexicon:
    return load_lexicon(demo_lexicon_path())


def code_subpart(text: str, lexicon: Lexicon, side: Side) -> Optional[str]:
    """Concept of the first applicable matching rule, or ``None`` when uncoded."""
    side = Side(side)
    for rule in lexicon.rules:
        if rule.applies_to(side) and rule.matches(text):
            return rule.concept
    return None


def code_unit(unit: CausalUnit, lexicon: Lexicon) -> Union[CodedUnit, Uncoded]:
    cause = code_subpart(unit.cause_text, lexicon, Side.CAUSE)
    effect = code_subpart(unit.effect_text, lexicon, Side.EFFECT)
    if cause is None or effect is None:
        failed = tuple(s for s, c in ((Side.CAUSE, cause), (Side.EFFECT, effect)) if c is None)
        return Uncoded(unit, failed)
    return CodedUnit(
        unit=unit,
        cause_concept=cause,
        effect_concept=effect,
        cause_theme=lexicon.theme_of(cause),
        effect_theme=lexicon.theme_of(effect),
    )


def code_all(
    units: Iterable[CausalUnit], lexicon: Lexicon
) -> Tuple[List[CodedUnit], List[Uncoded]]:
    coded: List[CodedUnit] = []
    uncoded: List[Uncoded] = []
    for unit in units:
        result = code_unit(unit, lexicon)
        if isinstance(result, CodedUnit):
            coded.append(result)
        else:
            uncoded.append(result)
    logger.info("coded %d unit(s), %d uncoded", len(coded), len(uncoded))
    return coded, uncoded


@dataclass(frozen=True)
class UncodedSubpart:
    message_id: str
    side: Side
    text: str

    def to_record(self) -> Dict[str, Any]:
        return {"message_id": self.message_id, "side": self.side.value, "text": self.text}


def sample_uncoded(
    units: Sequence[CausalUnit],
    lexicon: Lexicon,
    n: int,
    seed: int,
    side: Optional[Side] = None,
) -> List[UncodedSubpart]:
    """Seeded uniform sample (without replacement) of subparts no rule codes.

    Feeds manual keyword discovery: review the sample, add rules, re-run.
    """
    if n < 0:
        raise ValueError("sample size must be nonnegative")
    sides = (Side(side),) if side is not None else (Side.CAUSE, Side.EFFECT)
    pool: List[UncodedSubpart] = []
    for unit in units:
        for s in sides:
            text = unit.cause_text if s is Side.CAUSE else unit.effect_text
            if code_subpart(text, lexicon, s) is None:
                pool.append(UncodedSubpart(unit.message_id, s, text))
    if n > len(pool):
        logger.warning(
            "requested %d uncoded subparts but only %d exist; returning all", n, len(pool)
        )
        n = len(pool)
    order = np.random.default_rng(seed).permutation(len(pool))
    return [pool[i] for i in order[:n]]


@dataclass
class CodingReport:
    rows: List[Dict[str, Any]]
    units: int
    coded: int
    uncoded_cause: int
    uncoded_effect: int

    @property
    def coverage(self) -> Optional[float]:
        return self.coded / self.units if self.units else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "units": self.units,
            "coded": self.coded,
            "coverage": self.coverage,
            "uncoded_cause": self.uncoded_cause,
            "uncoded_effect": self.uncoded_effect,
            "concepts_used": sum(1 for r in self.rows if r["cause_count"] or r["effect_count"]),
            "rows": self.rows,
        }


def coding_report(units: Sequence[CausalUnit], lexicon: Lexicon) -> CodingReport:
    cause_counts = {c: 0 for c in lexicon.concepts}
    effect_counts = {c: 0 for c in lexicon.concepts}
    coded = uncoded_cause = uncoded_effect = 0
    for unit in units:
        result = code_unit(unit, lexicon)
        if isinstance(result, CodedUnit):
            coded += 1
            cause_counts[result.cause_concept] += 1
            effect_counts[result.effect_concept] += 1
        else:
            uncoded_cause += Side.CAUSE in result.failed
            uncoded_effect += Side.EFFECT in result.failed
    rows = [
        {
            "concept": c,
            "theme": lexicon.theme_of(c),
            "cause_count": cause_counts[c],
            "effect_count": effect_counts[c],
        }
        for c in lexicon.concepts
        if cause_counts[c] or effect_counts[c]
    ]
    return CodingReport(rows, len(units), coded, uncoded_cause, uncoded_effect)
