"""Conditional uniform graph (CUG) tests.

Each replicate owns a substream spawned from the root seed, so serial and
process-pool runs give identical draws in identical order.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import StatisticUndefinedError
from .graph import ConceptNet
from .stats import STATISTIC_LABELS, adjacency, arc_count, dyad_census, get_statistic

logger = logging.getLogger(__name__)

DEFAULT_REPLICATES = 1000


class Conditioning(str, Enum):
    EDGES = "Edges"
    DYAD_CENSUS = "DyadCensus"

    @property
    def label(self) -> str:
        return "Edges" if self is Conditioning.EDGES else "Dyad Census"


# rows of the combined-network CUG table
DEFAULT_TESTS: Tuple[Tuple[str, Conditioning], ...] = (
    ("edgewise_reciprocity", Conditioning.EDGES),
    ("transitivity", Conditioning.DYAD_CENSUS),
    ("indegree_centralization", Conditioning.DYAD_CENSUS),
    ("outdegree_centralization", Conditioning.DYAD_CENSUS),
    ("betweenness_centralization", Conditioning.DYAD_CENSUS),
)


@dataclass(frozen=True)
class CugResult:
    statistic_name: str
    observed: float
    conditioning: Conditioning
    replicates: int
    p_ge: float
    p_le: float
    null_draws: Tuple[float, ...]
    seed: int
    missing: int = 0

    @property
    def null_mean(self) -> Optional[float]:
        return float(np.mean(self.null_draws)) if self.null_draws else None

    def to_dict(self, include_draws: bool = False) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "statistic": self.statistic_name,
            "label": STATISTIC_LABELS.get(self.statistic_name, self.statistic_name),
            "conditioning": self.conditioning.value,
            "observed": self.observed,
            "p_ge": self.p_ge,
            "p_le": self.p_le,
            "replicates": self.replicates,
            "missing": self.missing,
            "null_mean": self.null_mean,
            "seed": self.seed,
        }
        if include_draws:
            out["null_draws"] = list(self.null_draws)
        return out


def draw_edges(n: int, arcs: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform loopless digraph of order n with exactly ``arcs`` arcs."""
    off = np.flatnonzero(~np.eye(n, dtype=bool))
    chosen = rng.choice(off, size=arcs, replace=False)
    a = np.zeros(n * n, dtype=np.int8)
    a[chosen] = 1
    return a.reshape(n, n)


def draw_dyad_census(n: int, census: Tuple[int, int, int], rng: np.random.Generator) -> np.ndarray:
    """Uniform digraph with the given (mutual, asymmetric, null) census."""
    mutual, asym, null = census
    rows, cols = np.triu_indices(n, k=1)
    if mutual + asym + null != len(rows):
        raise ValueError(f"dyad census {census} does not fit {n} nodes")
    states = np.repeat(np.array([2, 1, 0], dtype=np.int8), [mutual, asym, null])
    states = rng.permutation(states)
    a = np.zeros((n, n), dtype=np.int8)
    both = states == 2
    a[rows[both], cols[both]] = 1
    a[cols[both], rows[both]] = 1
    one = np.flatnonzero(states == 1)
    forward = rng.random(len(one)) < 0.5
    a[rows[one[forward]], cols[one[forward]]] = 1
    a[cols[one[~forward]], rows[one[~forward]]] = 1
    return a


def _replicate(job: Tuple[np.random.SeedSequence, int, Any, str, str]) -> float:
    seed_seq, n, conditioning_arg, conditioning, statistic = job
    rng = np.random.default_rng(seed_seq)
    if conditioning == Conditioning.EDGES.value:
        a = draw_edges(n, conditioning_arg, rng)
    else:
        a = draw_dyad_census(n, conditioning_arg, rng)
    try:
        return float(get_statistic(statistic)(a))
    except StatisticUndefinedError:
        return float("nan")


def monte_carlo_p(observed: float, draws: np.ndarray) -> Tuple[float, float]:
    """+1-corrected upper and lower tail probabilities; ties count in both tails."""
    tie = np.isclose(draws, observed, rtol=1e-12, atol=1e-12)
    ge = int(((draws > observed) | tie).sum())
    le = int(((draws < observed) | tie).sum())
    total = len(draws) + 1
    return (1 + ge) / total, (1 + le) / total


def cug_test(
    net: ConceptNet | np.ndarray,
    statistic: str,
    conditioning: Conditioning | str,
    replicates: int = DEFAULT_REPLICATES,
    seed: int = 0,
    workers: int = 1,
) -> CugResult:
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    cond = Conditioning(conditioning)
    fn = get_statistic(statistic)
    a = adjacency(net)
    n = a.shape[0]
    observed = float(fn(a))
    arg: Any = arc_count(a) if cond is Conditioning.EDGES else dyad_census(a)
    children = np.random.SeedSequence(seed).spawn(replicates)
    jobs = [(child, n, arg, cond.value, statistic) for child in children]

    if workers > 1:
        chunk = max(1, replicates // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values: List[float] = list(pool.map(_replicate, jobs, chunksize=chunk))
    else:
        values = [_replicate(job) for job in jobs]

    raw = np.array(values, dtype=float)
    valid = raw[~np.isnan(raw)]
    missing = int(len(raw) - len(valid))
    if missing:
        logger.warning(
            "%s under %s: %d of %d draw(s) undefined and excluded",
            statistic,
            cond.value,
            missing,
            replicates,
        )
    p_ge, p_le = monte_carlo_p(observed, valid)
    logger.debug(
        "cug %s|%s observed=%.4f p_ge=%.4f p_le=%.4f", statistic, cond.value, observed, p_ge, p_le
    )
    return CugResult(
        statistic_name=statistic,
        observed=observed,
        conditioning=cond,
        replicates=len(valid),
        p_ge=p_ge,
        p_le=p_le,
        null_draws=tuple(valid.tolist()),
        seed=seed,
        missing=missing,
    )


def cug_table(
    net: ConceptNet,
    tests: Sequence[Tuple[str, Conditioning]] = DEFAULT_TESTS,
    replicates: int = DEFAULT_REPLICATES,
    seed: int = 0,
    workers: int = 1,
) -> List[CugResult]:
    """Run a battery of tests; each row derives its own root seed from ``seed``."""
    roots = np.random.SeedSequence(seed).generate_state(len(tests))
    results = []
    for (statistic, cond), root in zip(tests, roots):
        try:
            results.append(cug_test(net, statistic, cond, replicates, int(root), workers))
        except StatisticUndefinedError as e:
            logger.warning("skipping %s: %s", statistic, e)
    return results
