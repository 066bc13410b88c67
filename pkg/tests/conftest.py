from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pytest

from causalnet.core.corpus import AccountRole, Message, MessageSet
from causalnet.core.graph import ConceptNet, Stratum
from causalnet.core.lexicon import load_demo_lexicon
from causalnet.core.synthetic import write_synthetic_corpus

FIXTURES = Path(__file__).parent / "fixtures"


def make_message(
    id: str = "m1",
    text: str = "Offices closed due to snow.",
    timestamp: datetime = datetime(2020, 3, 15, 12, 0, tzinfo=timezone.utc),
    account_id: str = "acct",
    account_role: AccountRole = AccountRole.LOCAL_EM,
    follower_count: int = 100,
    retransmission_count: int = 0,
    is_retransmission: bool = False,
) -> Message:
    return Message(
        id=id,
        text=text,
        timestamp=timestamp,
        account_id=account_id,
        account_role=account_role,
        follower_count=follower_count,
        retransmission_count=retransmission_count,
        is_retransmission=is_retransmission,
    )


def make_net(weights, nodes=None, stratum=None) -> ConceptNet:
    w = np.asarray(weights)
    nodes = nodes or [f"c{i}" for i in range(w.shape[0])]
    return ConceptNet(nodes, w, stratum or Stratum("total", None, "total"))


def record(**overrides):
    rec = {
        "id": "m1",
        "text": "Offices closed due to snow.",
        "timestamp": "2020-03-15T12:00:00Z",
        "account_id": "acct",
        "account_role": "local_em",
        "follower_count": 100,
        "retransmission_count": 3,
        "is_retransmission": False,
    }
    rec.update(overrides)
    return rec


def write_jsonl(path: Path, records) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write((rec if isinstance(rec, str) else json.dumps(rec)) + "\n")
    return path


@pytest.fixture(scope="session")
def demo_lexicon():
    return load_demo_lexicon()


@pytest.fixture
def message_set():
    return MessageSet(
        messages=(
            make_message("a", "Offices closed due to the winter storm."),
            make_message("b", "Stay safe this weekend!"),
            make_message(
                "c",
                "Many residents are struggling to pay rent because of the pandemic.",
                timestamp=datetime(2020, 4, 2, 9, 30, tzinfo=timezone.utc),
                account_role=AccountRole.GOVERNOR,
                is_retransmission=True,
            ),
        )
    )


@pytest.fixture(scope="session")
def synthetic_corpus(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("corpus") / "corpus.jsonl"
    return write_synthetic_corpus(path, n_messages=900, seed=11)
