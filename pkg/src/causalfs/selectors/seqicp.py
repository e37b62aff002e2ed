"""Invariance-based subset selection across environments.

Every candidate predictor subset is accepted when the pooled-regression
residuals look identically distributed across environments (equal means by
a Chow-style F test, equal variances by Bartlett's test, combined with
Bonferroni). The reported set is the intersection of all accepted subsets;
when nothing is accepted, the empty result is flagged as informative -- the
data rejected the invariance premise itself.
"""
from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from ..errors import Insufficient, NeedEnvironments
from ..numerics import chi2_sf, f_sf, ols_fit
from ..panel import DesignMatrix
from .base import Environment, FeatureSet


def halves_environments(n: int) -> list[Environment]:
    """Default environment split: first and second half of the window."""
    idx = np.arange(n)
    return [
        Environment("first-half", idx[: n // 2]),
        Environment("second-half", idx[n // 2 :]),
    ]


def residual_invariance_p(residuals: np.ndarray, environments) -> float:
    """Bonferroni-combined p-value of mean and variance equality."""
    groups = [residuals[env.rows] for env in environments]
    e = len(groups)
    n = sum(len(g) for g in groups)
    grand = residuals.mean() if n else 0.0
    between = sum(len(g) * (g.mean() - grand) ** 2 for g in groups)
    within = sum(float(((g - g.mean()) ** 2).sum()) for g in groups)
    if within <= 0.0:
        p_mean = 1.0 if between <= 0.0 else 0.0
    else:
        f_stat = (between / (e - 1)) / (within / (n - e))
        p_mean = f_sf(f_stat, e - 1, n - e)
    variances = [float(((g - g.mean()) ** 2).sum()) / (len(g) - 1) for g in groups]
    if min(variances) <= 0.0:
        p_var = 1.0 if max(variances) <= 0.0 else 0.0
    else:
        pooled = within / (n - e)
        stat = (n - e) * math.log(pooled) - sum(
            (len(g) - 1) * math.log(v) for g, v in zip(groups, variances)
        )
        correction = 1.0 + (
            sum(1.0 / (len(g) - 1) for g in groups) - 1.0 / (n - e)
        ) / (3.0 * (e - 1))
        p_var = chi2_sf(stat / correction, e - 1)
    return min(1.0, 2.0 * min(p_mean, p_var))


def seqicp_select(
    design: DesignMatrix,
    environments: list[Environment] | None = None,
    alpha: float = 0.05,
    max_subset_size: int = 2,
) -> FeatureSet:
    """Intersection of all predictor subsets with invariant residuals.

    Subsets range over the design's feature names up to ``max_subset_size``
    (the empty set included); each one is fitted by pooled OLS on all of its
    lags plus the target's own lag and an intercept -- conditioning on the
    target's past is what keeps residuals serially clean, so invariance is
    judged on the feature subset alone. The output set is contained in
    every accepted subset by construction.
    """
    if environments is None:
        environments = halves_environments(design.n)
    if len(environments) < 2:
        raise NeedEnvironments("invariance testing needs >= 2 environments")
    all_rows = np.concatenate([env.rows for env in environments])
    if len(np.unique(all_rows)) != design.n or len(all_rows) != design.n:
        raise ValueError("environments must partition the design rows")
    names = design.feature_names
    max_cols = 2 + design.p * max_subset_size  # intercept + target lag + subset
    for env in environments:
        if len(env) <= max_cols + 1:
            raise Insufficient(
                f"environment {env.label!r} has {len(env)} rows for up to "
                f"{max_cols} regressors"
            )
    accepted: list[frozenset[str]] = []
    appearances = {name: 0 for name in names}
    best_p = {name: 0.0 for name in names}
    for size in range(0, max_subset_size + 1):
        for subset in combinations(names, size):
            cols = [0] + design.feature_column_indices(subset)
            fit = ols_fit(design.X[:, cols], design.y, intercept=True)
            p = residual_invariance_p(fit.residuals, environments)
            for name in subset:
                best_p[name] = max(best_p[name], p)
            if p > alpha:
                accepted.append(frozenset(subset))
                for name in subset:
                    appearances[name] += 1
    diagnostics = {
        name: (float(appearances[name]), best_p[name]) for name in names
    }
    if not accepted:
        return FeatureSet(frozenset(), diagnostics, "seqicp", empty_informative=True)
    estimate = frozenset.intersection(*accepted)
    return FeatureSet(estimate, diagnostics, "seqicp", empty_informative=False)
