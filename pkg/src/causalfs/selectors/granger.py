"""Multivariate lag-based causality selection via nested-model F tests."""
from __future__ import annotations

from ..errors import Underdetermined
from ..numerics import f_test_nested, ols_fit
from ..panel import DesignMatrix
from .base import FeatureSet


def granger_select(design: DesignMatrix, alpha: float = 0.05) -> FeatureSet:
    """Select features whose joint lag block improves the full model.

    For each feature the full model (target lag plus all feature lags) is
    compared against the model with that feature's p lags removed; the
    feature is kept when the F test rejects at level alpha. Diagnostics
    carry every (F, p) pair.
    """
    names = design.feature_names
    n, k_cols = design.X.shape
    k_full = k_cols + 1  # intercept counted
    if n <= k_full:
        raise Underdetermined(
            f"{n} design rows for {k_full} regressors; pre-filter the features"
        )
    full = ols_fit(design.X, design.y, intercept=True)
    diagnostics = {}
    selected = set()
    for name in names:
        drop = set(design.feature_column_indices([name]))
        keep = [i for i in range(k_cols) if i not in drop]
        restricted = ols_fit(design.X[:, keep], design.y, intercept=True)
        test = f_test_nested(
            restricted.rss, full.rss, q=len(drop), n=n, k_full=k_full
        )
        diagnostics[name] = (test.statistic, test.p_value)
        if test.p_value < alpha:
            selected.add(name)
    return FeatureSet(frozenset(selected), diagnostics, "granger")
