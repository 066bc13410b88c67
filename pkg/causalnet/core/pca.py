"""Network principal component analysis over cell-aligned concept networks.

Graphs are vectorized over their off-diagonal cells; the graph covariance
matrix is diagonalized with cyclic Jacobi rotations. Column k of the loadings
holds every graph's weight on component k, and the component's score graph
is the loading-weighted sum of the input graphs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import GraphError, NumericalError
from .graph import ConceptNet, Stratum, write_dot, write_edge_list

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10
OFFDIAG_TOL = 1e-12
MAX_SWEEPS = 100


def _off_diagonal(net: ConceptNet) -> np.ndarray:
    mask = ~np.eye(net.n, dtype=bool)
    return net.weights[mask].astype(float)


def _check_inputs(nets: Sequence[ConceptNet]) -> None:
    if len(nets) < 2:
        raise GraphError("network PCA needs at least two graphs")
    reference = nets[0]
    for net in nets[1:]:
        if net.nodes != reference.nodes:
            raise GraphError(
                f"stratum {net.stratum.label}: nodes differ from {reference.stratum.label}"
            )


def graph_covariance(nets: Sequence[ConceptNet]) -> np.ndarray:
    """p x p covariance of the graphs' off-diagonal cell vectors (N-1 divisor)."""
    _check_inputs(nets)
    vectors = np.vstack([_off_diagonal(net) for net in nets])
    cov = np.atleast_2d(np.cov(vectors, ddof=1))
    return (cov + cov.T) / 2.0


def _sign_fix(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    out = vectors.copy()
    for k in range(out.shape[1]):
        lead = int(np.argmax(np.abs(out[:, k])))
        if out[lead, k] < 0:
            out[:, k] = -out[:, k]
    return out


def eigen_sym(
    c: np.ndarray, tol: float = OFFDIAG_TOL, max_sweeps: int = MAX_SWEEPS
) -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Returns eigenvalues in descending order and orthonormal eigenvectors as
    columns, sign-normalized so each column's largest entry is positive. The
    stopping threshold is scaled by the matrix's largest entry when that
    exceeds one.
    """
    a = np.array(c, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NumericalError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max())) if a.size else 1.0
    if np.abs(a - a.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise NumericalError("matrix is not symmetric")
    p = a.shape[0]
    v = np.eye(p)
    threshold = tol * scale
    for sweep in range(max_sweeps):
        off = np.abs(a[~np.eye(p, dtype=bool)])
        if off.size == 0 or off.max() < threshold:
            break
        for k in range(p - 1):
            for l in range(k + 1, p):
                if abs(a[k, l]) < threshold:
                    continue
                phi = (a[l, l] - a[k, k]) / (2.0 * a[k, l])
                t = 1.0 / (abs(phi) + np.sqrt(phi * phi + 1.0))
                if phi < 0.0:
                    t = -t
                cos = 1.0 / np.sqrt(t * t + 1.0)
                sin = t * cos
                col_k, col_l = a[:, k].copy(), a[:, l].copy()
                a[:, k] = cos * col_k - sin * col_l
                a[:, l] = sin * col_k + cos * col_l
                row_k, row_l = a[k, :].copy(), a[l, :].copy()
                a[k, :] = cos * row_k - sin * row_l
                a[l, :] = sin * row_k + cos * row_l
                a[k, l] = a[l, k] = 0.0
                vk, vl = v[:, k].copy(), v[:, l].copy()
                v[:, k] = cos * vk - sin * vl
                v[:, l] = sin * vk + cos * vl
    else:
        raise NumericalError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    logger.debug("jacobi converged after %d sweep(s) for p=%d", sweep, p)
    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    return values[order], _sign_fix(v[:, order])


@dataclass
class PcaResult:
    graph_labels: List[str]
    covariance: np.ndarray
    eigenvalues: np.ndarray
    loadings: np.ndarray
    score_graphs: List[ConceptNet] = field(default_factory=list)
    centered_scores: bool = False
    scale_loadings: bool = False

    @property
    def p(self) -> int:
        return len(self.graph_labels)

    @property
    def scaled_loadings(self) -> np.ndarray:
        """Loadings multiplied by the square root of their eigenvalue."""
        return self.loadings * np.sqrt(np.clip(self.eigenvalues, 0.0, None))[None, :]

    def component_names(self) -> List[str]:
        return [f"pc{k + 1}" for k in range(self.p)]

    def covariance_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.covariance, index=self.graph_labels, columns=self.graph_labels)

    def eigenvalue_frame(self) -> pd.DataFrame:
        total = float(self.eigenvalues.sum())
        share = self.eigenvalues / total if total > 0 else np.zeros_like(self.eigenvalues)
        return pd.DataFrame(
            {
                "component": self.component_names(),
                "eigenvalue": self.eigenvalues,
                "share": share,
                "cumulative_share": np.cumsum(share),
            }
        )

    def loadings_frame(self) -> pd.DataFrame:
        values = self.scaled_loadings if self.scale_loadings else self.loadings
        return pd.DataFrame(values, index=self.graph_labels, columns=self.component_names())

    def to_dict(self) -> Dict[str, object]:
        return {
            "graphs": list(self.graph_labels),
            "eigenvalues": self.eigenvalues.tolist(),
            "loadings": self.loadings_frame().to_dict(orient="index"),
            "components": len(self.score_graphs),
            "centered_scores": self.centered_scores,
            "scale_loadings": self.scale_loadings,
        }


def score_graph(
    nets: Sequence[ConceptNet], weights: np.ndarray, component: int, centered: bool = False
) -> ConceptNet:
    total = np.zeros((nets[0].n, nets[0].n))
    for net, w in zip(nets, weights):
        cells = net.weights.astype(float)
        if centered:
            cells = cells - _off_diagonal(net).mean()
        total += w * cells
    np.fill_diagonal(total, 0.0)
    label = f"pc{component}"
    return nets[0].with_weights(total, Stratum("component", component, label))


def network_pca(
    nets: Sequence[ConceptNet],
    components: int = 2,
    centered_scores: bool = False,
    scale_loadings: bool = False,
) -> PcaResult:
    cov = graph_covariance(nets)
    p = len(nets)
    if not 1 <= components <= p:
        raise ValueError(f"components must be between 1 and {p}, got {components}")
    values, vectors = eigen_sym(cov)
    scores = [score_graph(nets, vectors[:, k], k + 1, centered_scores) for k in range(components)]
    logger.info(
        "network pca over %d graph(s): leading eigenvalues %s",
        p,
        ", ".join(f"{x:.4g}" for x in values[:components]),
    )
    return PcaResult(
        graph_labels=[net.stratum.label for net in nets],
        covariance=cov,
        eigenvalues=values,
        loadings=vectors,
        score_graphs=scores,
        centered_scores=centered_scores,
        scale_loadings=scale_loadings,
    )


def scree(result: PcaResult, k: int) -> List[float]:
    if k < 1 or k > result.p:
        raise ValueError(f"scree length {k} outside 1..{result.p}")
    return result.eigenvalues[:k].tolist()


def write_pca(result: PcaResult, out_dir: Union[str, Path]) -> List[Path]:
    """Covariance, eigenvalue and loadings CSVs plus one edge list and DOT per score graph."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmt = {"lineterminator": "\n", "float_format": "%.10g"}
    written = []
    result.covariance_frame().to_csv(out / "covariance.csv", index_label="graph", **fmt)
    result.eigenvalue_frame().to_csv(out / "eigenvalues.csv", index=False, **fmt)
    result.loadings_frame().to_csv(out / "loadings.csv", index_label="graph", **fmt)
    written += [out / "covariance.csv", out / "eigenvalues.csv", out / "loadings.csv"]
    for net in result.score_graphs:
        written.append(write_edge_list([net], out / f"score_{net.stratum.label}.csv"))
        written.append(write_dot(net, out / f"score_{net.stratum.label}.dot"))
    return written
