"""Lag-structure estimation plus ICA-based instantaneous causal ordering.

The pipeline follows four steps: a correlation-guided cluster pre-filter to
keep the covariate count below the observation count, an equation-wise
least-squares fit of the lag structure, ICA on the residuals, and recovery
of the instantaneous effects matrix by permutation search on the unmixing
matrix. Non-Gaussian noise is what makes the ordering identifiable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import TooManyCovariates
from ..numerics import fastica, kmeans, ols_fit, pearson
from ..panel import AlignedPanel
from .base import FeatureSet


@dataclass(frozen=True)
class VarLingamResult:
    """Full estimation output; ``variable_names[0]`` is the target."""

    variable_names: tuple[str, ...]
    kept_features: tuple[str, ...]
    corr_with_target: dict[str, float]
    instantaneous: np.ndarray  # A0, row = effect, col = cause
    lagged: tuple[np.ndarray, ...]  # A_tau in the same orientation
    causal_order: tuple[str, ...]
    ica_converged: bool


def cluster_prefilter(
    panel: AlignedPanel, k_clusters: int, seed: int = 0
) -> tuple[tuple[str, ...], dict[str, float]]:
    """One representative feature per k-means cluster of standardized series.

    Within each cluster the feature with the strongest absolute correlation
    with the target survives; ties resolve to the lowest column index.
    """
    X = panel.features
    std = X.std(axis=0, ddof=1)
    std = np.where(std > 0, std, 1.0)
    Xs = (X - X.mean(axis=0)) / std
    corr = {}
    for j, name in enumerate(panel.feature_names):
        try:
            corr[name] = pearson(X[:, j], panel.target)
        except Exception:
            corr[name] = 0.0
    if k_clusters >= panel.n_features:
        return panel.feature_names, corr
    result = kmeans(Xs.T, k_clusters, seed=seed)
    kept = []
    for c in range(k_clusters):
        members = [j for j in range(panel.n_features) if result.assignments[j] == c]
        if not members:
            continue
        best = max(members, key=lambda j: (abs(corr[panel.feature_names[j]]), -j))
        kept.append(best)
    kept.sort()
    return tuple(panel.feature_names[j] for j in kept), corr


def _permute_unit_diagonal(W: np.ndarray) -> np.ndarray:
    """Row-permute W to maximize the diagonal, then scale rows to unit diag."""
    cost = 1.0 / np.maximum(np.abs(W), 1e-12)
    rows, cols = linear_sum_assignment(cost)
    permuted = np.empty_like(W)
    permuted[cols] = W[rows]
    return permuted / np.diag(permuted)[:, None]


def _causal_order(B0: np.ndarray) -> tuple[int, ...]:
    """Permutation making B0 (row = effect) closest to strictly lower
    triangular; exhaustive for up to 8 variables, greedy beyond."""
    m = B0.shape[0]
    if m <= 8:
        best, best_score = None, math.inf
        for perm in permutations(range(m)):
            score = sum(
                B0[perm[a], perm[b]] ** 2 for a in range(m) for b in range(a + 1, m)
            )
            if score < best_score:
                best, best_score = perm, score
        return best
    # greedy: repeatedly take the row with the least unexplained mass
    remaining = list(range(m))
    order = []
    while remaining:
        scores = [
            sum(B0[i, j] ** 2 for j in remaining if j != i) for i in remaining
        ]
        pick = remaining[int(np.argmin(scores))]
        order.append(pick)
        remaining.remove(pick)
    return tuple(order)


def varlingam_fit(
    panel: AlignedPanel,
    p: int = 1,
    k_clusters: int | None = None,
    seed: int = 0,
    ica_max_iter: int = 500,
    ica_tol: float = 1e-5,
) -> VarLingamResult:
    """Estimate instantaneous and lagged effect matrices on [target, features].

    Requires more observations than covariates after the pre-filter (pass
    ``k_clusters`` to shrink a wide panel first).
    """
    if k_clusters is not None:
        kept, corr = cluster_prefilter(panel, k_clusters, seed=seed)
    else:
        _, corr = cluster_prefilter(panel, panel.n_features, seed=seed)
        kept = panel.feature_names
    names = (panel.target_name, *kept)
    m = len(names)
    T = len(panel)
    if T - p <= p * m + 1:
        raise TooManyCovariates(
            f"{T - p} usable rows for {p * m} lag regressors; "
            "reduce k_clusters or the lag order"
        )
    X = np.column_stack(
        [panel.target] + [panel.column(name) for name in kept]
    )
    # step 1: equation-wise least squares for the lag structure
    rows = T - p
    lag_blocks = [X[p - tau : T - tau] for tau in range(1, p + 1)]
    lagged_X = np.hstack(lag_blocks)  # rows x (p*m)
    resid = np.empty((rows, m))
    B = np.zeros((p, m, m))  # B[tau-1][i, j]: var i at lag tau+1 -> var j
    for j in range(m):
        fit = ols_fit(lagged_X, X[p:T, j], intercept=True)
        resid[:, j] = fit.residuals
        coef = fit.beta[1:]
        for tau in range(p):
            B[tau][:, j] = coef[tau * m : (tau + 1) * m]
    # step 2: ICA separates the residuals into independent shocks
    ica = fastica(resid, seed=seed, max_iter=ica_max_iter, tol=ica_tol)
    # step 3: instantaneous matrix from the permuted, rescaled unmixing
    W_tilde = _permute_unit_diagonal(ica.unmixing)
    A0 = np.eye(m) - W_tilde
    np.fill_diagonal(A0, 0.0)
    order_idx = _causal_order(A0)
    # step 4: lagged causal matrices, instantaneous effects removed
    lagged = tuple((np.eye(m) - A0) @ B[tau].T for tau in range(p))
    return VarLingamResult(
        variable_names=names,
        kept_features=kept,
        corr_with_target=corr,
        instantaneous=A0,
        lagged=lagged,
        causal_order=tuple(names[i] for i in order_idx),
        ica_converged=ica.converged,
    )


def varlingam_select(
    panel: AlignedPanel,
    p: int = 1,
    k_clusters: int | None = None,
    edge_threshold: float = 0.05,
    seed: int = 0,
    use_instantaneous: bool = True,
    use_lagged: bool = True,
    ica_max_iter: int = 500,
    ica_tol: float = 1e-5,
) -> FeatureSet:
    """Select features with an effect on the target above ``edge_threshold``
    in the instantaneous matrix or any lag matrix (switchable per kind)."""
    result = varlingam_fit(
        panel, p=p, k_clusters=k_clusters, seed=seed,
        ica_max_iter=ica_max_iter, ica_tol=ica_tol,
    )
    diagnostics = {}
    selected = set()
    for name in panel.feature_names:
        if name not in result.kept_features:
            diagnostics[name] = (abs(result.corr_with_target[name]), 0.0)
            continue
        j = result.variable_names.index(name)
        weight = 0.0
        if use_instantaneous:
            weight = max(weight, abs(result.instantaneous[0, j]))
        if use_lagged:
            for A in result.lagged:
                weight = max(weight, abs(A[0, j]))
        diagnostics[name] = (abs(result.corr_with_target[name]), weight)
        if weight > edge_threshold:
            selected.add(name)
    return FeatureSet(frozenset(selected), diagnostics, "varlingam")
