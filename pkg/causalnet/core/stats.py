"""Descriptive statistics on dichotomized discourse networks.

All statistics treat any nonzero cell as an arc and ignore the diagonal:
self-loops stay in the valued networks but never enter density, reciprocity,
transitivity or centralization.
"""

from __future__ import annotations

import logging
from functools import lru_cache
from typing import Any, Callable, Dict, Tuple, Union

import networkx as nx
import numpy as np

from .errors import StatisticUndefinedError
from .graph import ConceptNet

logger = logging.getLogger(__name__)

GraphLike = Union[ConceptNet, np.ndarray]

# analytic star bound is used above this order
EXHAUSTIVE_MAX_ORDER = 5


def adjacency(net: GraphLike) -> np.ndarray:
    """Loopless 0/1 adjacency as an int8 matrix."""
    w = net.weights if isinstance(net, ConceptNet) else np.asarray(net)
    a = (w != 0).astype(np.int8)
    np.fill_diagonal(a, 0)
    return a


def arc_count(net: GraphLike) -> int:
    return int(adjacency(net).sum())


def density(net: GraphLike) -> float:
    a = adjacency(net)
    n = a.shape[0]
    if n < 2:
        raise StatisticUndefinedError("degenerate graph")
    return a.sum() / (n * (n - 1))


def dyad_census(net: GraphLike) -> Tuple[int, int, int]:
    """(mutual, asymmetric, null) counts over unordered pairs."""
    a = adjacency(net)
    n = a.shape[0]
    mutual = int((a & a.T).sum()) // 2
    asym = int(a.sum()) - 2 * mutual
    return mutual, asym, n * (n - 1) // 2 - mutual - asym


def mutual_dyads(net: GraphLike) -> float:
    return float(dyad_census(net)[0])


def edgewise_reciprocity(net: GraphLike) -> float:
    a = adjacency(net)
    m = a.sum()
    if m == 0:
        raise StatisticUndefinedError("undefined: graph has no arcs")
    return (a & a.T).sum() / m


def reciprocity_lift(net: GraphLike) -> float:
    """Pr(i->j | j->i) divided by the marginal Pr(i->j)."""
    a = adjacency(net)
    m = a.sum()
    if m == 0:
        raise StatisticUndefinedError("undefined conditional: no reversed-arc pairs")
    n = a.shape[0]
    # ordered pairs whose reverse arc exists are exactly the m arcs, transposed
    conditional = (a & a.T).sum() / m
    return conditional / (m / (n * (n - 1)))


def transitivity(net: GraphLike) -> float:
    """Share of two-paths i->j->k (distinct i, j, k) closed by i->k."""
    a = adjacency(net).astype(np.int64)
    paths = a @ a
    np.fill_diagonal(paths, 0)
    two_paths = paths.sum()
    if two_paths == 0:
        raise StatisticUndefinedError("undefined: no two-paths")
    return (paths * a).sum() / two_paths


def degree_centralization(net: GraphLike, mode: str = "in") -> float:
    """Freeman degree centralization, normalized by (n-1)^2."""
    a = adjacency(net)
    n = a.shape[0]
    if n < 3:
        raise StatisticUndefinedError("degree centralization needs at least 3 nodes")
    if mode not in {"in", "out"}:
        raise ValueError(f"unknown degree mode {mode!r}")
    deg = a.sum(axis=0 if mode == "in" else 1)
    return (deg.max() - deg).sum() / (n - 1) ** 2


def betweenness_scores(net: GraphLike) -> np.ndarray:
    """Directed shortest-path betweenness (Brandes), in node order."""
    a = adjacency(net)
    g = nx.from_numpy_array(a, create_using=nx.DiGraph)
    scores = nx.betweenness_centrality(g, normalized=False)
    return np.array([scores[i] for i in range(a.shape[0])], dtype=float)


def batch_betweenness(adj: np.ndarray) -> np.ndarray:
    """Betweenness for a stack of loopless digraphs of shape (B, n, n).

    Counts geodesics through walk counts: the number of shortest s-t paths is
    the number of s-t walks of length d(s, t).
    """
    a = (np.asarray(adj) != 0).astype(np.int64)
    batch, n, _ = a.shape
    idx = np.arange(n)
    a[:, idx, idx] = 0
    dist = np.full((batch, n, n), np.inf)
    sigma = np.zeros((batch, n, n))
    walks = a.copy()
    for length in range(1, n):
        fresh = (walks > 0) & np.isinf(dist)
        dist[fresh] = length
        sigma[fresh] = walks[fresh]
        walks = walks @ a
    dist[:, idx, idx] = 0
    sigma[:, idx, idx] = 1
    scores = np.zeros((batch, n))
    off = ~np.eye(n, dtype=bool)
    for v in range(n):
        d_sv = dist[:, :, v][:, :, None]
        d_vt = dist[:, v, :][:, None, :]
        on_geodesic = (d_sv + d_vt == dist) & np.isfinite(dist)
        mask = off.copy()
        mask[v, :] = False
        mask[:, v] = False
        through = sigma[:, :, v][:, :, None] * sigma[:, v, :][:, None, :]
        ratio = np.divide(through, sigma, out=np.zeros_like(through), where=sigma > 0)
        scores[:, v] = (ratio * (on_geodesic & mask)).sum(axis=(1, 2))
    return scores


def _all_digraphs(n: int, chunk: int = 1 << 15):
    """Yield every loopless digraph of order n, in chunks of adjacency stacks."""
    cells = [(i, j) for i in range(n) for j in range(n) if i != j]
    total = 1 << len(cells)
    rows = np.array([c[0] for c in cells])
    cols = np.array([c[1] for c in cells])
    bits = np.arange(len(cells), dtype=np.int64)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        present = (codes[:, None] >> bits[None, :]) & 1
        adj = np.zeros((len(codes), n, n), dtype=np.int8)
        adj[:, rows, cols] = present
        yield adj


@lru_cache(maxsize=None)
def exhaustive_betweenness_normalizer(n: int) -> float:
    """Largest sum of (max - c_i) betweenness over all loopless digraphs of order n."""
    if n > EXHAUSTIVE_MAX_ORDER:
        raise ValueError(f"exhaustive search is limited to n <= {EXHAUSTIVE_MAX_ORDER}")
    best = 0.0
    for adj in _all_digraphs(n):
        scores = batch_betweenness(adj)
        spread = (scores.max(axis=1, keepdims=True) - scores).sum(axis=1)
        best = max(best, float(spread.max()))
    logger.debug("exhaustive betweenness normalizer n=%d: %g", n, best)
    return best


def star_betweenness_normalizer(n: int) -> float:
    """Bidirected star: the hub lies on all (n-1)(n-2) leaf-to-leaf geodesics."""
    return float((n - 1) ** 2 * (n - 2))


def betweenness_normalizer(n: int) -> float:
    if n <= EXHAUSTIVE_MAX_ORDER:
        return exhaustive_betweenness_normalizer(n)
    return star_betweenness_normalizer(n)


def betweenness_centralization(net: GraphLike) -> float:
    a = adjacency(net)
    n = a.shape[0]
    if n < 3:
        raise StatisticUndefinedError("betweenness centralization needs at least 3 nodes")
    scores = betweenness_scores(a)
    return float((scores.max() - scores).sum() / betweenness_normalizer(n))


def indegree_centralization(net: GraphLike) -> float:
    return degree_centralization(net, "in")


def outdegree_centralization(net: GraphLike) -> float:
    return degree_centralization(net, "out")


StatisticFn = Callable[[GraphLike], float]

STATISTICS: Dict[str, StatisticFn] = {
    "density": density,
    "edgewise_reciprocity": edgewise_reciprocity,
    "reciprocity_lift": reciprocity_lift,
    "transitivity": transitivity,
    "indegree_centralization": indegree_centralization,
    "outdegree_centralization": outdegree_centralization,
    "betweenness_centralization": betweenness_centralization,
    "mutual_dyads": mutual_dyads,
}

STATISTIC_LABELS = {
    "density": "Density",
    "edgewise_reciprocity": "Edgewise Reciprocity",
    "reciprocity_lift": "Reciprocity Lift",
    "transitivity": "Transitivity",
    "indegree_centralization": "In-Degree Centralization",
    "outdegree_centralization": "Out-Degree Centralization",
    "betweenness_centralization": "Betweenness Centralization",
    "mutual_dyads": "Mutual Dyads",
}


def get_statistic(name: str) -> StatisticFn:
    try:
        return STATISTICS[name]
    except KeyError:
        raise ValueError(f"unknown statistic {name!r}; choose from {', '.join(STATISTICS)}")


def describe(net: GraphLike) -> Dict[str, Any]:
    """Observed descriptive block for one network; undefined values are ``None``."""
    a = adjacency(net)
    n = a.shape[0]
    out: Dict[str, Any] = {"nodes": n, "arcs": arc_count(a)}
    if isinstance(net, ConceptNet):
        out["self_loops"] = int(np.count_nonzero(np.diag(net.weights)))
    for name, fn in STATISTICS.items():
        try:
            out[name] = float(fn(a))
        except StatisticUndefinedError:
            out[name] = None
    out["mean_degree"] = float(a.sum() / n) if n else None
    mutual, asym, null = dyad_census(a)
    out["dyad_census"] = {"mutual": mutual, "asymmetric": asym, "null": null}
    used = np.flatnonzero(a.sum(axis=0) + a.sum(axis=1))
    out["active_nodes"] = int(len(used))
    if len(used):
        g = nx.from_numpy_array(a[np.ix_(used, used)], create_using=nx.DiGraph)
        out["weakly_connected"] = bool(nx.is_weakly_connected(g))
    else:
        out["weakly_connected"] = None
    return out
