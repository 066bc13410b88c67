"""Seeded synthetic agency-message corpus for demos and end-to-end tests.

Narratives are drawn from a planted cause->effect frequency table whose
phrases code cleanly under the demo lexicon; roles and months tilt the
mix. Retransmission counts follow an NB2 process driven by follower count
and the narrative's themes.
"""

from __future__ import annotations

import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .corpus import AccountRole, Message, dump_corpus, parse_epoch

logger = logging.getLogger(__name__)

DEFAULT_MESSAGES = 3000
DEFAULT_MONTHS = 15
ACCOUNTS_PER_ROLE = 8
THETA = 0.6

CAUSE_PHRASES: Dict[str, Tuple[str, ...]] = {
    "Primary Threat": ("COVID-19", "the coronavirus pandemic", "the pandemic"),
    "Weather": ("the winter storm", "heavy rain", "extreme heat", "high winds", "snow and ice"),
    "Spread": ("community spread", "a recent outbreak", "possible exposure"),
    "Severity/Impact": ("rising case rates", "a surge in hospitalizations"),
    "Economic Impacts": ("the economic downturn",),
    "Restrictions": ("the stay-at-home order", "new capacity limits"),
    "Traffic": ("a crash on the highway", "a multi-vehicle collision"),
    "Infrastructure": ("a water main break", "power outages"),
    "Illness/Injury": ("the flu", "carbon monoxide poisoning"),
    "Other Secondary Threats": ("a sewage spill", "a gas leak"),
    "Events": ("the holiday weekend", "the Fourth of July weekend"),
    "Vaccination": ("limited vaccine supply",),
}

EFFECT_PHRASES: Dict[str, Tuple[str, ...]] = {
    "Disruptions": (
        "All county offices are closed",
        "Tonight's council meeting is cancelled",
        "Trash pickup is delayed",
        "The parade has been postponed",
    ),
    "Financial Struggle": (
        "Many residents are struggling to pay rent",
        "Unemployment claims have increased",
    ),
    "Deaths": ("We mourn 12 more deaths", "Three more residents have died"),
    "Need Assistance": ("Families in need can apply for assistance",),
    "Mental": ("Stress and anxiety are rising",),
    "Weather": ("Icy conditions are expected", "Flooding is likely in low areas"),
    "Severity/Impact": ("Hospitalizations are rising", "Case counts are climbing"),
    "Actions/Efficacy": ("Please wear masks", "Practice social distancing"),
    "Infrastructure": ("Power outages are reported across the city",),
    "Provide Assistance": ("Relief funds are now available",),
    "Official Response": ("The governor declared a state of emergency",),
    "Testing": ("Free testing sites are open",),
    "Change of Mode": ("Classes will move online",),
    "Spread": ("New cases are linked to an outbreak",),
}

# (cause, effect, weight, first month the narrative can appear)
NARRATIVES: Tuple[Tuple[str, str, float, int], ...] = (
    ("Weather", "Disruptions", 13.0, 1),
    ("Primary Threat", "Disruptions", 8.0, 3),
    ("Primary Threat", "Financial Struggle", 5.0, 3),
    ("Weather", "Weather", 4.5, 1),
    ("Primary Threat", "Deaths", 4.2, 3),
    ("Spread", "Testing", 3.0, 3),
    ("Primary Threat", "Change of Mode", 3.0, 3),
    ("Weather", "Infrastructure", 3.0, 1),
    ("Severity/Impact", "Actions/Efficacy", 2.5, 3),
    ("Restrictions", "Financial Struggle", 2.0, 3),
    ("Economic Impacts", "Need Assistance", 2.0, 3),
    ("Primary Threat", "Mental", 2.0, 3),
    ("Traffic", "Disruptions", 2.0, 1),
    ("Infrastructure", "Disruptions", 1.5, 1),
    ("Events", "Spread", 1.5, 3),
    ("Primary Threat", "Official Response", 1.5, 3),
    ("Illness/Injury", "Deaths", 1.0, 1),
    ("Other Secondary Threats", "Disruptions", 1.0, 1),
    ("Economic Impacts", "Provide Assistance", 1.0, 3),
    ("Vaccination", "Severity/Impact", 1.0, 12),
)

# role -> cause concepts that role talks about twice as often
_ROLE_TILT = {
    AccountRole.PUBLIC_HEALTH: {"Primary Threat", "Spread", "Severity/Impact", "Vaccination"},
    AccountRole.STATE_FED_EM: {"Weather", "Infrastructure"},
    AccountRole.LOCAL_EM: {"Weather", "Traffic", "Other Secondary Threats"},
    AccountRole.GOVERNOR: {"Economic Impacts", "Restrictions"},
    AccountRole.MAYOR: {"Economic Impacts", "Events"},
}

# planted log-mean shifts by theme of the narrative's effect / cause
_EFFECT_SHIFT = {
    "Deaths": 0.6,
    "Severity/Impact": 0.4,
    "Financial Struggle": 0.3,
    "Need Assistance": 0.3,
    "Weather": -0.2,
    "Infrastructure": -0.2,
}
_CAUSE_SHIFT = {"Primary Threat": 0.3, "Vaccination": 0.5, "Weather": -0.1}

FILLER = (
    "Stay safe and check on your neighbors.",
    "Join us for a live update at 3 PM.",
    "Sign up for local alerts on our website.",
    "Our call center is open until 8 PM tonight.",
    "Read the latest guidance on our website.",
)
CONNECTIVES = (("due to", 0.7), ("because of", 0.2), ("caused by", 0.1))
TRAILERS = (
    "Wait times may be longer because of high call volume.",
    "Some lines are longer than usual due to high demand.",
)


def _lower_first(text: str) -> str:
    return text[:1].lower() + text[1:]


def _weights(role: AccountRole, month: int) -> np.ndarray:
    w = np.array(
        [
            weight * (2.0 if cause in _ROLE_TILT[role] else 1.0) if month >= start else 0.0
            for cause, _, weight, start in NARRATIVES
        ]
    )
    return w / w.sum()


def _timestamp(month: int, epoch: Tuple[int, int], rng: np.random.Generator) -> datetime:
    year, first = parse_epoch(epoch)
    offset = first - 1 + month - 1
    return datetime(
        year + offset // 12,
        offset % 12 + 1,
        int(rng.integers(1, 29)),
        int(rng.integers(0, 24)),
        int(rng.integers(0, 60)),
        int(rng.integers(0, 60)),
        tzinfo=timezone.utc,
    )


def _pick(options: Sequence[str], rng: np.random.Generator) -> str:
    return options[int(rng.integers(len(options)))]


def generate_corpus(
    n_messages: int = DEFAULT_MESSAGES,
    seed: int = 0,
    months: int = DEFAULT_MONTHS,
    epoch: Union[str, Tuple[int, int]] = "2020-01",
) -> List[Message]:
    """Messages in timestamp order; every month and every role is represented."""
    if n_messages < max(months, len(AccountRole)):
        raise ValueError(f"need at least {max(months, len(AccountRole))} messages")
    rng = np.random.default_rng(seed)
    roles = list(AccountRole)
    accounts = [
        (f"{role.value}_{i:02d}", role, int(rng.lognormal(8.5, 1.3)))
        for i in range(ACCOUNTS_PER_ROLE)
        for role in roles
    ]
    month_of = rng.permutation(np.arange(n_messages) % months) + 1
    # the first len(roles) messages use one account of each role
    account_of = rng.integers(0, len(accounts), size=n_messages)
    account_of[: len(roles)] = np.arange(len(roles))
    conn_names = [c for c, _ in CONNECTIVES]
    conn_p = np.array([p for _, p in CONNECTIVES])

    drafts = []
    for i in range(n_messages):
        account_id, role, followers = accounts[int(account_of[i])]
        month = int(month_of[i])
        ts = _timestamp(month, parse_epoch(epoch), rng)
        cause, effect, _, _ = NARRATIVES[int(rng.choice(len(NARRATIVES), p=_weights(role, month)))]
        cause_text = _pick(CAUSE_PHRASES[cause], rng)
        effect_text = _pick(EFFECT_PHRASES[effect], rng)
        connective = conn_names[int(rng.choice(len(conn_names), p=conn_p))]
        kind = rng.random()
        eta = -2.0 + 0.45 * np.log1p(followers)
        if kind < 0.12:
            text = _pick(FILLER, rng)
        elif kind < 0.20:
            text = f"{connective.capitalize()} {cause_text}, {_lower_first(effect_text)}."
        else:
            text = f"{effect_text} {connective} {cause_text}."
            if kind < 0.25:
                text += " " + _pick(TRAILERS, rng)
            eta += _EFFECT_SHIFT.get(effect, 0.0) + _CAUSE_SHIFT.get(cause, 0.0)
        retransmission = bool(rng.random() < 0.08)
        if retransmission:
            text = f"RT @{account_id}: {text}"
        mu = float(np.exp(eta))
        count = int(rng.negative_binomial(THETA, THETA / (THETA + mu)))
        drafts.append((ts, account_id, role, followers, text, count, retransmission))

    drafts.sort(key=lambda d: (d[0], d[1], d[4]))
    messages = [
        Message(
            id=f"m{i:06d}",
            text=text,
            timestamp=ts,
            account_id=account_id,
            account_role=role,
            follower_count=followers,
            retransmission_count=count,
            is_retransmission=retransmission,
        )
        for i, (ts, account_id, role, followers, text, count, retransmission) in enumerate(drafts)
    ]
    logger.info("generated %d synthetic message(s) over %d month(s)", len(messages), months)
    return messages


def write_synthetic_corpus(
    path: Union[str, Path],
    n_messages: int = DEFAULT_MESSAGES,
    seed: int = 0,
    fmt: str = "jsonl",
) -> Path:
    return dump_corpus(generate_corpus(n_messages, seed), path, fmt)
