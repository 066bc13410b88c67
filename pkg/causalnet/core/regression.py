"""NB2 negative binomial regression of retransmission counts.

Var(y) = mu + mu^2 / theta with a log link. The fit alternates IRLS for the
coefficients at fixed theta with a safeguarded Newton step on log(theta);
every accepted step is non-decreasing in the log-likelihood. Standard errors
come from the inverted observed information over (beta, theta).
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import digamma, gammaln, polygamma
from scipy.stats import norm

from .errors import ConvergenceError, NumericalError
from .features import CONTROL_BLOCKS, DesignMatrix, FeatureTable, ModelFormula, design_matrix

logger = logging.getLogger(__name__)

TOL = 1e-8
MAX_OUTER = 100
MAX_INNER = 25
MAX_HALVINGS = 30
THETA_MIN = 1e-8
THETA_MAX = 1e8
POISSON_LIKE_THETA = 1e6
ETA_LIMIT = 700.0
STAR_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"))
NUMBER_FORMAT = "%.6g"


def _num(x: float) -> str:
    return NUMBER_FORMAT % x


def _mean(beta: np.ndarray, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    eta = X @ beta
    if not np.all(np.isfinite(eta)) or (eta.size and eta.max() > ETA_LIMIT):
        raise NumericalError("linear predictor overflow")
    return eta, np.exp(eta)


def nb_loglik(beta: np.ndarray, theta: float, X: np.ndarray, y: np.ndarray) -> float:
    """Sum of NB2 log-probabilities of ``y`` under mean exp(X beta)."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    eta, mu = _mean(np.asarray(beta, dtype=float), np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    # log(theta + mu) = log(theta) + log1p(mu / theta), exact in the Poisson limit
    shrink = np.log1p(mu / theta)
    terms = (
        gammaln(y + theta)
        - gammaln(theta)
        - gammaln(y + 1.0)
        - theta * shrink
        + y * (eta - math.log(theta) - shrink)
    )
    return float(terms.sum())


def nb_score(
    beta: np.ndarray, theta: float, X: np.ndarray, y: np.ndarray
) -> Tuple[np.ndarray, float]:
    """Gradient of ``nb_loglik`` in beta and in theta."""
    _, mu = _mean(beta, X)
    grad_beta = X.T @ (theta * (y - mu) / (theta + mu))
    grad_theta = np.sum(
        digamma(y + theta) - digamma(theta) - np.log1p(mu / theta) + (mu - y) / (theta + mu)
    )
    return grad_beta, float(grad_theta)


def nb_hessian(beta: np.ndarray, theta: float, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Observed Hessian over (beta, theta); theta is the last row/column."""
    _, mu = _mean(beta, X)
    denom = (theta + mu) ** 2
    k = X.shape[1]
    h = np.empty((k + 1, k + 1))
    h[:k, :k] = -(X.T * (theta * mu * (theta + y) / denom)) @ X
    cross = X.T @ (mu * (y - mu) / denom)
    h[:k, k] = cross
    h[k, :k] = cross
    h[k, k] = np.sum(
        polygamma(1, y + theta)
        - polygamma(1, theta)
        + 1.0 / theta
        - 2.0 / (theta + mu)
        + (y + theta) / denom
    )
    return h


def _safe_loglik(beta: np.ndarray, theta: float, X: np.ndarray, y: np.ndarray) -> float:
    try:
        return nb_loglik(beta, theta, X, y)
    except NumericalError:
        return -math.inf


def _weighted_solve(X: np.ndarray, w: np.ndarray, z: np.ndarray) -> np.ndarray:
    sw = np.sqrt(w)
    solution, *_ = np.linalg.lstsq(X * sw[:, None], z * sw, rcond=None)
    return solution


def _poisson_start(X: np.ndarray, y: np.ndarray, tol: float = TOL) -> np.ndarray:
    mu = (y + y.mean()) / 2.0 + 1e-3
    beta = _weighted_solve(X, mu, np.log(mu) + (y - mu) / mu)
    for _ in range(MAX_INNER * 2):
        eta = np.clip(X @ beta, -ETA_LIMIT, ETA_LIMIT)
        mu = np.exp(eta)
        new = _weighted_solve(X, mu, eta + (y - mu) / mu)
        if not np.all(np.isfinite(new)):
            break
        done = np.max(np.abs(new - beta)) < tol
        beta = new
        if done:
            break
    return beta


def initial_theta(y: np.ndarray) -> float:
    """Method of moments: max(0.1, ybar^2 / (s^2 - ybar)); near-Poisson data start at 1e6."""
    ybar = float(y.mean())
    s2 = float(y.var(ddof=1)) if len(y) > 1 else 0.0
    if s2 <= ybar:
        logger.warning("sample variance %.4g <= mean %.4g; starting theta at 1e6", s2, ybar)
        return POISSON_LIKE_THETA
    return max(0.1, ybar * ybar / (s2 - ybar))


def _slack(ll: float) -> float:
    # rounding noise of a summed log-likelihood
    return 1e-12 * (1.0 + abs(ll)) if math.isfinite(ll) else 0.0


def _irls(
    beta: np.ndarray,
    theta: float,
    X: np.ndarray,
    y: np.ndarray,
    tol: float,
    guarded: bool = True,
) -> Tuple[np.ndarray, float]:
    """IRLS for beta at fixed theta with step-halving; returns (beta, loglik)."""
    ll = _safe_loglik(beta, theta, X, y)
    for _ in range(MAX_INNER):
        _, mu = _mean(beta, X)
        w = theta * mu / (theta + mu)
        proposal = _weighted_solve(X, w, X @ beta + (y - mu) / mu)
        step = proposal - beta
        for _ in range(MAX_HALVINGS):
            candidate = beta + step
            cand_ll = _safe_loglik(candidate, theta, X, y)
            if cand_ll >= ll - _slack(ll) or (not guarded and math.isfinite(cand_ll)):
                break
            step = step / 2.0
        else:
            return beta, ll
        beta, ll = candidate, cand_ll
        if np.max(np.abs(step), initial=0.0) < tol:
            break
    return beta, ll


def _theta_newton(
    beta: np.ndarray, log_theta: float, X: np.ndarray, y: np.ndarray, ll: float, tol: float
) -> Tuple[float, float]:
    """Safeguarded Newton on t = log(theta); returns (t, loglik)."""
    lo, hi = math.log(THETA_MIN), math.log(THETA_MAX)
    poisson_like = math.log(POISSON_LIKE_THETA)
    _, mu = _mean(beta, X)
    for _ in range(MAX_INNER):
        theta = math.exp(log_theta)
        g = float(
            np.sum(
                digamma(y + theta)
                - digamma(theta)
                - np.log1p(mu / theta)
                + (mu - y) / (theta + mu)
            )
        )
        h = float(
            np.sum(
                polygamma(1, y + theta)
                - polygamma(1, theta)
                + 1.0 / theta
                - 2.0 / (theta + mu)
                + (y + theta) / (theta + mu) ** 2
            )
        )
        grad = theta * g
        curv = theta * theta * h + theta * g
        step = -grad / curv if curv < 0 else math.copysign(1.0, grad)
        step = max(-5.0, min(5.0, step))
        moved = False
        for _ in range(MAX_HALVINGS):
            candidate = min(hi, max(lo, log_theta + step))
            cand_ll = _safe_loglik(beta, math.exp(candidate), X, y)
            if cand_ll >= ll - _slack(ll):
                # past the Poisson-like bound only clear gains count; the rest is rounding
                flat = abs(cand_ll - ll) <= _slack(ll) and candidate > poisson_like
                moved = candidate != log_theta and not flat
                break
            step /= 2.0
        if not moved:
            break
        delta = candidate - log_theta
        log_theta, ll = candidate, cand_ll
        if abs(delta) < tol:
            break
    return log_theta, ll


@dataclass
class NbFit:
    names: List[str]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    theta: float
    theta_se: float
    log_likelihood: float
    n_obs: int
    converged: bool
    iterations: int
    message: str = ""
    loglik_trace: List[float] = field(default_factory=list)
    fitted: Optional[np.ndarray] = None
    blocks: Dict[str, str] = field(default_factory=dict)

    @property
    def aic(self) -> float:
        return 2.0 * (len(self.coefficients) + 1) - 2.0 * self.log_likelihood

    @property
    def alpha(self) -> float:
        return 1.0 / self.theta

    def coefficient(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "converged": self.converged,
            "message": self.message,
            "iterations": self.iterations,
            "n_obs": self.n_obs,
            "log_likelihood": self.log_likelihood,
            "aic": self.aic,
            "theta": self.theta,
            "theta_se": self.theta_se,
            "alpha": self.alpha,
            "coefficients": {
                n: {"estimate": float(b), "std_error": float(s)}
                for n, b, s in zip(self.names, self.coefficients, self.standard_errors)
            },
        }


def fit_nb_arrays(
    X: np.ndarray,
    y: np.ndarray,
    names: Optional[Sequence[str]] = None,
    tol: float = TOL,
    max_iter: int = MAX_OUTER,
) -> NbFit:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    names = list(names) if names is not None else [f"x{i}" for i in range(k)]
    if n <= k:
        raise NumericalError(f"{n} observation(s) cannot identify {k} coefficient(s)")
    if np.any(y < 0) or np.any(y != np.floor(y)):
        raise NumericalError("response must be nonnegative integer counts")

    beta = _poisson_start(X, y)
    log_theta = math.log(initial_theta(y))
    ll = _safe_loglik(beta, math.exp(log_theta), X, y)
    trace = [ll]
    converged = False
    iterations = 0
    message = ""
    for iterations in range(1, max_iter + 1):
        try:
            new_beta, ll = _irls(beta, math.exp(log_theta), X, y, tol * 1e-2)
            new_log_theta, ll = _theta_newton(new_beta, log_theta, X, y, ll, tol * 1e-2)
        except NumericalError as e:
            message = str(e)
            break
        trace.append(ll)
        d_beta = float(np.max(np.abs(new_beta - beta), initial=0.0))
        d_theta = abs(new_log_theta - log_theta)
        beta, log_theta = new_beta, new_log_theta
        logger.debug("nb iteration %d: loglik=%.6f theta=%.6g", iterations, ll, math.exp(log_theta))
        if d_beta < tol and d_theta < tol:
            converged = True
            break
    else:
        message = f"no convergence after {max_iter} outer iterations"

    theta = math.exp(log_theta)
    if converged:
        # unguarded polish: plain scoring steps settle the score equations to rounding
        beta, ll = _irls(beta, theta, X, y, 1e-15, guarded=False)
        trace.append(ll)

    ses = np.full(k, np.nan)
    theta_se = math.nan
    try:
        info = -nb_hessian(beta, theta, X, y)
        diag = np.diag(np.linalg.inv(info))
        if not (np.isfinite(diag[k]) and diag[k] > 0):
            # theta at its Poisson-limit bound carries no information; use the beta block
            diag = np.append(np.diag(np.linalg.inv(info[:k, :k])), math.nan)
        if not (np.all(np.isfinite(diag[:k])) and np.all(diag[:k] > 0)):
            raise np.linalg.LinAlgError("observed information is not positive definite")
        ses = np.sqrt(diag[:k])
        theta_se = math.sqrt(diag[k]) if diag[k] > 0 else math.nan
    except (np.linalg.LinAlgError, NumericalError) as e:
        if converged:
            converged = False
            message = str(e)
    if not converged:
        logger.warning("negative binomial fit did not converge: %s", message)
    else:
        logger.info(
            "negative binomial fit: %d obs, loglik=%.3f, theta=%.4g in %d iteration(s)",
            n,
            ll,
            theta,
            iterations,
        )
    fitted = np.exp(np.clip(X @ beta, -ETA_LIMIT, ETA_LIMIT))
    return NbFit(
        names=names,
        coefficients=beta,
        standard_errors=ses,
        theta=theta,
        theta_se=theta_se,
        log_likelihood=ll,
        n_obs=n,
        converged=converged,
        iterations=iterations,
        message=message,
        loglik_trace=trace,
        fitted=fitted,
    )


def fit_nb(table: FeatureTable, formula: Optional[ModelFormula] = None) -> NbFit:
    return fit_design(design_matrix(table, formula))


def fit_design(design: DesignMatrix) -> NbFit:
    fit = fit_nb_arrays(design.X, design.y, design.names)
    fit.blocks = dict(design.blocks)
    return fit


def wald_tests(fit: NbFit) -> pd.DataFrame:
    """Per-coefficient z = beta / SE and two-sided normal p-values."""
    if not fit.converged:
        raise ConvergenceError(f"Wald tests need a converged fit ({fit.message})")
    se = np.asarray(fit.standard_errors, dtype=float)
    if np.any(~np.isfinite(se)) or np.any(se <= 0):
        bad = [n for n, s in zip(fit.names, se) if not (np.isfinite(s) and s > 0)]
        raise NumericalError(f"zero or undefined standard error for {', '.join(bad)}")
    z = fit.coefficients / se
    return pd.DataFrame(
        {
            "term": fit.names,
            "estimate": fit.coefficients,
            "std_error": se,
            "z": z,
            "p": 2.0 * norm.sf(np.abs(z)),
        }
    )


def stars(p: float) -> str:
    for level, mark in STAR_LEVELS:
        if p < level:
            return mark
    return ""


def simulate_nb(
    X: np.ndarray, beta: np.ndarray, theta: float, rng: np.random.Generator
) -> np.ndarray:
    """Draw NB2 counts with mean exp(X beta) and dispersion theta."""
    mu = np.exp(np.asarray(X) @ np.asarray(beta))
    return rng.negative_binomial(theta, theta / (theta + mu))


@dataclass
class RegressionReport:
    table: pd.DataFrame
    caption: str
    converged: bool
    diagnostics: str = ""

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.table.to_csv(buf, index=False, lineterminator="\n", float_format=NUMBER_FORMAT)
        return buf.getvalue()

    def to_markdown(self) -> str:
        if not self.converged:
            return "## Negative binomial regression\n\n" + self.diagnostics + "\n"
        lines = ["## Negative binomial regression", ""]
        for block_title, rows in (
            ("Model terms", self.table[self.table["block"] != "controls"]),
            ("Controls", self.table[self.table["block"] == "controls"]),
        ):
            if rows.empty:
                continue
            lines += [
                f"### {block_title}",
                "",
                "| Term | Estimate | Std. Error | Pr(>|z|) |",
                "|:-----|---------:|-----------:|---------:|",
            ]
            for r in rows.itertuples(index=False):
                estimate = f"{_num(r.estimate)}{r.stars}"
                lines.append(f"| {r.term} | {estimate} | {_num(r.std_error)} | {_num(r.p)} |")
            lines.append("")
        lines.append(self.caption)
        return "\n".join(lines) + "\n"


def regression_report(
    fit: NbFit,
    table: Optional[FeatureTable] = None,
) -> RegressionReport:
    """Coefficient table: model terms in design order, then the control block."""
    columns = ["term", "block", "estimate", "std_error", "z", "p", "stars"]
    if not fit.converged:
        diagnostics = (
            f"Fit did not converge after {fit.iterations} iteration(s): {fit.message}. "
            f"Last log-likelihood {fit.log_likelihood:.3f}, theta {fit.theta:.4g}, "
            f"n = {fit.n_obs}. The coefficient table is suppressed."
        )
        return RegressionReport(pd.DataFrame(columns=columns), "", False, diagnostics)
    tests = wald_tests(fit)
    tests["block"] = [
        "controls" if fit.blocks.get(t) in CONTROL_BLOCKS else "model" for t in tests["term"]
    ]
    tests["stars"] = [stars(p) for p in tests["p"]]
    ordered = pd.concat(
        [tests[tests["block"] == "model"], tests[tests["block"] == "controls"]],
        ignore_index=True,
    )[columns]
    caption = (
        f"Observations: {fit.n_obs:,}; Akaike Information Criterion: {fit.aic:,.1f}; "
        f"log-likelihood: {fit.log_likelihood:,.1f}; dispersion parameter (theta): "
        f"{fit.theta:.3f} (standard error {fit.theta_se:.3f}; alpha = 1/theta = {fit.alpha:.3f})."
    )
    if table is not None:
        caption += (
            f" Cause themes use \"{table.cause_reference}\" and effect themes use "
            f"\"{table.effect_reference}\" as the reference level; day of week uses Sunday "
            "and hour uses 12 AM UTC."
        )
    caption += " Significance: * p < 0.05, ** p < 0.01, *** p < 0.001."
    return RegressionReport(ordered, caption, True)
