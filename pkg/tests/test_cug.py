from __future__ import annotations

import itertools

import numpy as np
import pytest

from causalnet.core.cug import (
    DEFAULT_TESTS,
    Conditioning,
    cug_table,
    cug_test,
    draw_dyad_census,
    draw_edges,
    monte_carlo_p,
)
from causalnet.core.errors import StatisticUndefinedError
from causalnet.core.stats import dyad_census, edgewise_reciprocity

from conftest import make_net


def random_digraph(n, p, seed):
    a = (np.random.default_rng(seed).random((n, n)) < p).astype(int)
    np.fill_diagonal(a, 0)
    return a


def exhaustive_reciprocity(n, m):
    """Every arc set of size m over a loopless order-n digraph, scored at once."""
    cells = np.flatnonzero(~np.eye(n, dtype=bool))
    combos = np.array(list(itertools.combinations(range(len(cells)), m)))
    stack = np.zeros((len(combos), n * n), dtype=np.int8)
    stack[np.arange(len(combos))[:, None], cells[combos]] = 1
    stack = stack.reshape(-1, n, n)
    mutual = (stack & stack.transpose(0, 2, 1)).sum(axis=(1, 2))
    return mutual / m


def test_density_is_fixed_under_edges_conditioning():
    net = make_net(random_digraph(8, 0.3, 1))
    result = cug_test(net, "density", Conditioning.EDGES, replicates=50, seed=4)
    assert set(result.null_draws) == {result.observed}
    assert result.p_ge == result.p_le == 1.0


def test_mutual_dyads_are_fixed_under_dyad_census_conditioning():
    net = make_net(random_digraph(8, 0.4, 2))
    result = cug_test(net, "mutual_dyads", "DyadCensus", replicates=50, seed=4)
    assert set(result.null_draws) == {result.observed}
    assert result.p_ge == result.p_le == 1.0


def test_edges_draws_keep_order_and_arc_count():
    rng = np.random.default_rng(0)
    for _ in range(100):
        a = draw_edges(6, 11, rng)
        assert a.shape == (6, 6)
        assert a.sum() == 11
        assert not np.diag(a).any()


def test_dyad_census_draws_reproduce_the_census():
    rng = np.random.default_rng(0)
    census = dyad_census(random_digraph(7, 0.4, 9))
    for _ in range(100):
        a = draw_dyad_census(7, census, rng)
        assert dyad_census(a) == census
        assert not np.diag(a).any()
    with pytest.raises(ValueError, match="does not fit"):
        draw_dyad_census(4, (1, 1, 1), rng)


def test_p_values_are_corrected_and_bounded():
    net = make_net(random_digraph(9, 0.3, 5))
    for statistic, cond in DEFAULT_TESTS:
        result = cug_test(net, statistic, cond, replicates=40, seed=8)
        assert 0 < result.p_ge <= 1 and 0 < result.p_le <= 1
        assert result.p_ge + result.p_le >= 1
        assert result.replicates == len(result.null_draws)


def test_ties_count_in_both_tails():
    p_ge, p_le = monte_carlo_p(0.5, np.array([0.5, 0.2, 0.9]))
    assert (p_ge, p_le) == (0.75, 0.75)
    assert monte_carlo_p(1.0, np.array([])) == (1.0, 1.0)


def test_seeded_runs_reproduce_and_streams_are_per_replicate():
    net = make_net(random_digraph(8, 0.35, 3))
    a = cug_test(net, "edgewise_reciprocity", "Edges", replicates=30, seed=42)
    b = cug_test(net, "edgewise_reciprocity", "Edges", replicates=30, seed=42)
    assert a == b
    longer = cug_test(net, "edgewise_reciprocity", "Edges", replicates=60, seed=42)
    assert longer.null_draws[:30] == a.null_draws


def test_parallel_matches_serial():
    net = make_net(random_digraph(8, 0.35, 3))
    serial = cug_test(net, "transitivity", "DyadCensus", replicates=24, seed=7, workers=1)
    parallel = cug_test(net, "transitivity", "DyadCensus", replicates=24, seed=7, workers=2)
    assert serial == parallel


def test_undefined_draws_are_missing_not_zero(caplog):
    path = np.zeros((4, 4), dtype=int)
    path[0, 1] = path[1, 2] = 1
    with caplog.at_level("WARNING"):
        result = cug_test(path, "transitivity", "Edges", replicates=200, seed=1)
    assert result.missing > 0
    assert result.replicates + result.missing == 200
    assert "undefined and excluded" in caplog.text
    assert result.to_dict()["missing"] == result.missing


def test_undefined_observed_statistic_raises():
    with pytest.raises(StatisticUndefinedError):
        cug_test(np.zeros((4, 4)), "edgewise_reciprocity", "Edges", replicates=5)


def test_cug_table_skips_undefined_rows():
    rows = cug_table(make_net(np.zeros((6, 6), dtype=int)), replicates=5, seed=1)
    assert [r.statistic_name for r in rows] == [
        "indegree_centralization",
        "outdegree_centralization",
        "betweenness_centralization",
    ]


def test_cug_table_rows_and_dict_shape():
    net = make_net(random_digraph(8, 0.3, 12))
    rows = cug_table(net, replicates=10, seed=3)
    assert [(r.statistic_name, r.conditioning) for r in rows] == list(DEFAULT_TESTS)
    assert len({r.seed for r in rows}) == len(rows)
    record = rows[0].to_dict(include_draws=True)
    assert record["label"] == "Edgewise Reciprocity"
    assert record["conditioning"] == "Edges"
    assert len(record["null_draws"]) == record["replicates"] == 10


def test_invalid_arguments():
    net = make_net(random_digraph(5, 0.5, 1))
    with pytest.raises(ValueError):
        cug_test(net, "density", "Edges", replicates=0)
    with pytest.raises(ValueError, match="unknown statistic"):
        cug_test(net, "diameter", "Edges", replicates=5)
    with pytest.raises(ValueError):
        cug_test(net, "density", "Triads", replicates=5)


def test_edges_null_mean_matches_enumeration_order_four():
    values = exhaustive_reciprocity(4, 6)
    assert len(values) == 924
    observed = np.zeros((4, 4), dtype=int)
    cells = [(i, j) for i in range(4) for j in range(4) if i != j][:6]
    for i, j in cells:
        observed[i, j] = 1
    result = cug_test(observed, "edgewise_reciprocity", "Edges", replicates=3000, seed=5)
    draws = np.array(result.null_draws)
    se = values.std() / np.sqrt(len(draws))
    assert abs(draws.mean() - values.mean()) < 3 * se
    assert set(np.unique(draws)) <= set(np.unique(values))


@pytest.mark.slow
def test_edges_null_distribution_matches_enumeration_order_five():
    values = exhaustive_reciprocity(5, 10)
    observed = draw_edges(5, 10, np.random.default_rng(0))
    assert edgewise_reciprocity(observed) in set(values)
    result = cug_test(observed, "edgewise_reciprocity", "Edges", replicates=20000, seed=9)
    draws = np.array(result.null_draws)
    se = values.std() / np.sqrt(len(draws))
    assert abs(draws.mean() - values.mean()) < 3 * se
    # each support point's frequency within 4 binomial standard errors
    for v in np.unique(values):
        p = np.mean(values == v)
        freq = np.mean(draws == v)
        assert abs(freq - p) < 4 * np.sqrt(p * (1 - p) / len(draws)) + 1e-9


@pytest.mark.slow
def test_p_values_are_calibrated_when_the_observed_graph_is_a_null_draw():
    kstest = pytest.importorskip("scipy.stats").kstest
    p_values = []
    for rep in range(500):
        observed = draw_edges(10, 30, np.random.default_rng(10_000 + rep))
        result = cug_test(observed, "betweenness_centralization", "Edges", replicates=99, seed=rep)
        p_values.append(result.p_ge)
    assert kstest(p_values, "uniform").statistic < 0.08
