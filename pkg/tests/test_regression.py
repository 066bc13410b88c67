from __future__ import annotations

import io
import math

import numpy as np
import pandas as pd
import pytest
from scipy.stats import poisson

from causalnet.core.corpus import load_corpus
from causalnet.core.errors import ConvergenceError, NumericalError
from causalnet.core.extraction import extract_all
from causalnet.core.features import FeatureTable, ModelFormula, build_features
from causalnet.core.graph import build_networks
from causalnet.core.lexicon import code_all
from causalnet.core.regression import (
    NbFit,
    fit_nb,
    fit_nb_arrays,
    initial_theta,
    nb_hessian,
    nb_loglik,
    nb_score,
    regression_report,
    simulate_nb,
    stars,
    wald_tests,
)

BETA = np.array([0.5, -1.0])
THETA = 0.6


def design(n, seed, extra=0):
    rng = np.random.default_rng(seed)
    cols = [np.ones(n), rng.normal(size=n)] + [rng.normal(size=n) for _ in range(extra)]
    return np.column_stack(cols)


def simulated(n, seed, beta=BETA, theta=THETA):
    X = design(n, seed)
    y = simulate_nb(X, beta, theta, np.random.default_rng(seed + 1000))
    return X, y


def test_loglik_hand_value():
    X = np.ones((3, 1))
    assert nb_loglik(np.zeros(1), 1.0, X, np.zeros(3)) == pytest.approx(3 * math.log(0.5))


def test_loglik_poisson_limit():
    X = design(40, 2)
    beta = np.array([0.3, 0.4])
    y = np.random.default_rng(2).poisson(np.exp(X @ beta))
    expected = poisson.logpmf(y, np.exp(X @ beta)).sum()
    assert nb_loglik(beta, 1e8, X, y) == pytest.approx(expected, abs=1e-4)


def test_duplicated_observation_doubles_its_contribution():
    X = design(5, 3)
    y = np.array([0, 3, 1, 7, 2])
    beta = np.array([0.2, -0.1])
    base = nb_loglik(beta, 2.0, X, y)
    single = nb_loglik(beta, 2.0, X[:1], y[:1])
    doubled = nb_loglik(beta, 2.0, np.vstack([X, X[:1]]), np.append(y, y[0]))
    assert doubled - base == pytest.approx(single)


def test_loglik_errors():
    X = np.ones((2, 1))
    with pytest.raises(NumericalError, match="linear predictor overflow"):
        nb_loglik(np.array([1e4]), 1.0, X, np.zeros(2))
    with pytest.raises(ValueError):
        nb_loglik(np.zeros(1), 0.0, X, np.zeros(2))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_score_matches_central_differences(seed):
    rng = np.random.default_rng(seed)
    X = design(30, seed, extra=2)
    y = rng.poisson(2.0, size=30)
    beta = rng.normal(scale=0.3, size=4)
    theta = 1.7
    grad_beta, grad_theta = nb_score(beta, theta, X, y)
    h = 1e-5
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        numeric = (nb_loglik(beta + e, theta, X, y) - nb_loglik(beta - e, theta, X, y)) / (2 * h)
        assert grad_beta[i] == pytest.approx(numeric, rel=1e-4, abs=1e-6)
    numeric_theta = (nb_loglik(beta, theta + h, X, y) - nb_loglik(beta, theta - h, X, y)) / (2 * h)
    assert grad_theta == pytest.approx(numeric_theta, rel=1e-4, abs=1e-6)


def test_hessian_matches_differenced_score():
    rng = np.random.default_rng(9)
    X = design(25, 9)
    y = rng.poisson(3.0, size=25)
    beta, theta, h = np.array([0.8, 0.1]), 2.5, 1e-6
    hess = nb_hessian(beta, theta, X, y)
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        up = nb_score(beta + e, theta, X, y)[0]
        down = nb_score(beta - e, theta, X, y)[0]
        numeric = (up - down) / (2 * h)
        assert hess[:2, i] == pytest.approx(numeric, rel=1e-4, abs=1e-6)
    numeric = (nb_score(beta, theta + h, X, y)[1] - nb_score(beta, theta - h, X, y)[1]) / (2 * h)
    assert hess[2, 2] == pytest.approx(numeric, rel=1e-4, abs=1e-6)


def test_intercept_only_fit_reproduces_the_sample_mean():
    y = np.random.default_rng(4).negative_binomial(0.8, 0.8 / (0.8 + 3.0), size=400)
    fit = fit_nb_arrays(np.ones((400, 1)), y)
    assert fit.converged
    assert math.exp(fit.coefficients[0]) == pytest.approx(y.mean(), rel=1e-10)


def test_likelihood_never_decreases():
    X, y = simulated(3000, 5)
    fit = fit_nb_arrays(X, y)
    trace = np.array(fit.loglik_trace)
    slack = 1e-10 * (1 + np.abs(trace[:-1]))
    assert np.all(np.diff(trace) >= -slack)


def test_parameter_recovery():
    X, y = simulated(20000, 6)
    fit = fit_nb_arrays(X, y, ["(Intercept)", "x"])
    assert fit.converged
    assert np.all(np.abs(fit.coefficients - BETA) < 4 * fit.standard_errors)
    assert abs(fit.theta - THETA) < 4 * fit.theta_se
    assert fit.aic == pytest.approx(2 * 3 - 2 * fit.log_likelihood)
    assert fit.alpha == pytest.approx(1 / fit.theta)
    assert fit.coefficient("x") == fit.coefficients[1]


@pytest.mark.slow
def test_parameter_recovery_large_sample():
    X, y = simulated(50000, 7)
    fit = fit_nb_arrays(X, y)
    assert np.all(np.abs(fit.coefficients - BETA) < 3 * fit.standard_errors)
    assert abs(fit.theta - THETA) < 3 * fit.theta_se


@pytest.mark.slow
def test_wald_interval_coverage_across_simulations():
    hits = np.zeros(2)
    for seed in range(20):
        X, y = simulated(20000, 100 + seed)
        fit = fit_nb_arrays(X, y)
        hits += np.abs(fit.coefficients - BETA) <= 1.96 * fit.standard_errors
    coverage = hits / 20
    assert np.all((coverage >= 0.85) & (coverage <= 1.0))


def test_poisson_data_gives_large_theta():
    X = design(40000, 8)
    y = np.random.default_rng(8).poisson(np.exp(X @ np.array([1.5, 0.3])))
    fit = fit_nb_arrays(X, y)
    assert fit.converged
    assert fit.theta >= 100


def test_initial_theta(caplog):
    assert initial_theta(np.array([0, 0, 10, 10])) == pytest.approx(25 / (100 / 3 - 5))
    assert initial_theta(np.array([0, 100, 0, 100, 0, 100])) >= 0.1
    with caplog.at_level("WARNING"):
        assert initial_theta(np.array([2, 2, 2, 2])) == 1e6
    assert "starting theta at 1e6" in caplog.text


def test_shifting_a_predictor_leaves_fitted_means_unchanged():
    X, y = simulated(3000, 10)
    shifted = X.copy()
    shifted[:, 1] += 5.0
    a = fit_nb_arrays(X, y)
    b = fit_nb_arrays(shifted, y)
    assert b.fitted == pytest.approx(a.fitted, rel=1e-7)
    assert b.coefficients[1] == pytest.approx(a.coefficients[1], rel=1e-7)


def test_fit_is_deterministic():
    X, y = simulated(2000, 11)
    a, b = fit_nb_arrays(X, y), fit_nb_arrays(X, y)
    assert np.array_equal(a.coefficients, b.coefficients)
    assert a.theta == b.theta and a.log_likelihood == b.log_likelihood


def test_fit_input_checks():
    with pytest.raises(NumericalError, match="cannot identify"):
        fit_nb_arrays(np.ones((2, 2)), np.array([1, 2]))
    with pytest.raises(NumericalError, match="nonnegative integer"):
        fit_nb_arrays(np.ones((3, 1)), np.array([1, -2, 0]))
    with pytest.raises(NumericalError, match="nonnegative integer"):
        fit_nb_arrays(np.ones((3, 1)), np.array([1.5, 2, 0]))


def test_iteration_cap_reports_non_convergence(caplog):
    X, y = simulated(2000, 12)
    with caplog.at_level("WARNING"):
        fit = fit_nb_arrays(X, y, max_iter=1)
    assert not fit.converged
    assert "no convergence after 1" in fit.message
    assert "did not converge" in caplog.text


def test_matches_statsmodels():
    sm = pytest.importorskip("statsmodels.api")
    X, y = simulated(3000, 13)
    ours = fit_nb_arrays(X, y)
    model = sm.NegativeBinomial(y, X, loglike_method="nb2")
    ref = model.fit(method="newton", disp=0, maxiter=100)
    assert ours.coefficients == pytest.approx(ref.params[:2], rel=1e-4, abs=1e-5)
    assert ours.alpha == pytest.approx(ref.params[2], rel=1e-3)
    assert ours.log_likelihood == pytest.approx(ref.llf, rel=1e-8)


def _fake_fit(coefficients, errors, converged=True, blocks=None):
    names = [f"x{i}" for i in range(len(coefficients))]
    return NbFit(
        names=names,
        coefficients=np.asarray(coefficients, dtype=float),
        standard_errors=np.asarray(errors, dtype=float),
        theta=0.573,
        theta_se=0.01,
        log_likelihood=-22239.4,
        n_obs=6955,
        converged=converged,
        iterations=7,
        message="" if converged else "no convergence after 100 outer iterations",
        blocks=blocks or {},
    )


def test_wald_tests():
    tests = wald_tests(_fake_fit([0.0, 1.96, -2.0], [1.0, 1.0, 0.5]))
    assert tests["p"][0] == pytest.approx(1.0)
    assert tests["p"][1] == pytest.approx(0.05, abs=1e-3)
    assert list(np.sign(tests["z"])) == [0.0, 1.0, -1.0]
    with pytest.raises(NumericalError, match="x1"):
        wald_tests(_fake_fit([0.3, 0.2], [1.0, 0.0]))
    with pytest.raises(ConvergenceError):
        wald_tests(_fake_fit([0.3], [1.0], converged=False))


def test_significance_stars():
    assert [stars(p) for p in (0.0005, 0.005, 0.03, 0.2)] == ["***", "**", "*", ""]


def test_report_orders_blocks_and_agrees_with_csv():
    blocks = {"x0": "intercept", "x1": "months_elapsed", "x2": "structural"}
    fit = _fake_fit([0.1, -0.2, 1.5], [0.05, 0.1, 0.2], blocks=blocks)
    table = FeatureTable(
        frame=pd.DataFrame(),
        themes=[],
        cause_reference="Secondary Threats",
        effect_reference="Transitions and Shifts",
    )
    report = regression_report(fit, table)
    assert list(report.table["term"]) == ["x0", "x2", "x1"]
    assert list(report.table["block"]) == ["model", "model", "controls"]
    markdown = report.to_markdown()
    assert "### Model terms" in markdown and "### Controls" in markdown
    assert markdown.index("| x2 |") < markdown.index("### Controls") < markdown.index("| x1 |")
    assert "Akaike Information Criterion" in markdown
    assert "dispersion parameter (theta): 0.573" in markdown
    assert '"Secondary Threats"' in markdown
    csv = pd.read_csv(io.StringIO(report.to_csv()))
    for row in csv.itertuples(index=False):
        assert f"| {row.term} | {row.estimate:.6g}" in markdown
        assert f"{row.std_error:.6g}" in markdown


def test_unconverged_report_suppresses_the_table():
    report = regression_report(_fake_fit([0.1], [0.1], converged=False))
    assert not report.converged
    assert report.table.empty
    markdown = report.to_markdown()
    assert "suppressed" in markdown
    assert "|" not in markdown


def test_fit_nb_on_the_synthetic_corpus(synthetic_corpus, demo_lexicon):
    messages = load_corpus(synthetic_corpus)
    units, _ = extract_all(messages)
    coded, uncoded = code_all(units, demo_lexicon)
    nodes = demo_lexicon.concepts
    (total,) = build_networks(coded, messages, "total", nodes)
    monthly = build_networks(coded, messages, "month", nodes)
    table = build_features(coded, messages, total, monthly, demo_lexicon)
    fit = fit_nb(table, ModelFormula.parse("structural+usage"))
    assert fit.converged
    assert fit.n_obs == table.funnel["rows"]
    assert fit.names[0] == "(Intercept)"
    assert set(fit.blocks.values()) == {"intercept", "structural", "usage"}
    # follower count drives the planted retransmission process
    assert fit.coefficient("Log Follower Count") > 0
