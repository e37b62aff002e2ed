"""Two-stage lagged causal discovery with autocorrelation-safe link tests.

Stage one runs a condition-selection pass per variable: every lagged
candidate is tested against the strongest few other candidates, weak links
are dropped, and at most ``max_parents_stage1`` survive. Stage two retests
each surviving link into the target while conditioning on the remaining
parents of the target plus the time-shifted parents of the source, which is
what keeps false-positive rates near the nominal level on autocorrelated
series.
"""
from __future__ import annotations

import warnings

import numpy as np

from ..errors import SkippedTestWarning, Underdetermined
from ..numerics import partial_correlation
from ..panel import AlignedPanel
from .base import FeatureSet

Link = tuple[int, int]  # (variable index, lag >= 1)


class _LagView:
    """Aligned lagged value columns over a fixed evaluation window."""

    def __init__(self, data: np.ndarray, max_lag: int):
        self.data = data
        self.max_lag = max_lag
        self.rows = data.shape[0] - max_lag

    def col(self, var: int, lag: int) -> np.ndarray:
        start = self.max_lag - lag
        return self.data[start : start + self.rows, var]

    def matrix(self, links) -> np.ndarray:
        if not links:
            return np.empty((self.rows, 0))
        return np.column_stack([self.col(v, lag) for v, lag in links])


def _parcorr_or_none(view, x_link, y_var, cond_links, ci_test):
    """Run the CI test; None means it was skipped (too little data)."""
    if ci_test != "parcorr":
        raise ValueError(f"unsupported conditional independence test {ci_test!r}")
    x = view.col(*x_link)
    y = view.col(y_var, 0)
    Z = view.matrix(cond_links)
    if view.rows <= Z.shape[1] + 3:
        warnings.warn(
            f"skipping test with {Z.shape[1]} conditions on {view.rows} rows",
            SkippedTestWarning,
            stacklevel=3,
        )
        return None
    try:
        return partial_correlation(x, y, Z if Z.shape[1] else None)
    except Underdetermined:
        warnings.warn(
            "conditioning set too large for the sample; link retained",
            SkippedTestWarning,
            stacklevel=3,
        )
        return None


def _condition_select(
    view: _LagView,
    j: int,
    candidates: list[Link],
    alpha: float,
    max_cond_dim: int,
    max_parents: int,
    ci_test: str,
):
    """Stage-one parent screening for variable j (PC-stable style)."""
    strength = {link: np.inf for link in candidates}  # min |r| seen so far
    pval = {link: 0.0 for link in candidates}
    parents = list(candidates)
    for q in range(max_cond_dim + 1):
        if len(parents) - 1 < q:
            break
        removed = []
        for link in parents:
            others = [o for o in parents if o != link]
            others.sort(key=lambda o: -strength[o] if np.isfinite(strength[o]) else 0.0)
            cond = others[:q]
            result = _parcorr_or_none(view, link, j, cond, ci_test)
            if result is None:
                continue  # conservative: keep the link untested
            r, p = result
            strength[link] = min(strength[link], abs(r))
            pval[link] = max(pval[link], p)
            if p >= alpha:
                removed.append(link)
        for link in removed:
            parents.remove(link)
        parents.sort(key=lambda o: (-strength[o], o))
        parents = parents[:max_parents]
    return parents, strength, pval


def pcmci_select(
    panel: AlignedPanel,
    p: int = 1,
    alpha: float = 0.05,
    max_cond_dim: int = 3,
    max_parents_stage1: int = 10,
    ci_test: str = "parcorr",
) -> FeatureSet:
    """Select features with a link into the target that survives both stages.

    ``p`` is the maximum lag tested. The momentary tests in stage two need
    values up to lag 2p, so the panel must be comfortably longer than that.
    The target's own lags participate in conditioning but are never reported
    as selected features.
    """
    if p < 1:
        raise ValueError("lag order p must be >= 1")
    names = (panel.target_name, *panel.feature_names)
    data = np.column_stack([panel.target, panel.features])
    m = data.shape[1]
    candidates: list[Link] = [(i, tau) for i in range(m) for tau in range(1, p + 1)]

    # stage-one screening for the target and, lazily, for the source of
    # every surviving link (the only parent sets stage two ever conditions on)
    stage1_view = _LagView(data, p)

    def screen(j):
        return _condition_select(
            stage1_view, j, list(candidates), alpha, max_cond_dim,
            max_parents_stage1, ci_test,
        )

    parents: dict[int, list[Link]] = {}
    stat1: dict[int, dict] = {}
    pval1: dict[int, dict] = {}
    parents[0], stat1[0], pval1[0] = screen(0)
    for i in sorted({link[0] for link in parents[0]}):
        if i not in parents:
            parents[i], stat1[i], pval1[i] = screen(i)

    # stage two: momentary tests for links into the target (variable 0)
    mci_view = _LagView(data, 2 * p)
    best_stat = {name: 0.0 for name in panel.feature_names}
    best_p = {name: 1.0 for name in panel.feature_names}
    selected = set()
    for link in parents[0]:
        i, tau = link
        if i == 0:
            continue  # own target lag: conditioning only, never a feature
        cond = [c for c in parents[0] if c != link]
        cond += [(k, lag + tau) for k, lag in parents[i]]
        seen = set()
        cond_unique = []
        for c in cond:
            if c not in seen and c != link:
                seen.add(c)
                cond_unique.append(c)
        result = _parcorr_or_none(mci_view, link, 0, cond_unique, ci_test)
        if result is None:
            r, pv = stat1[0].get(link, 0.0), 0.0  # retained conservatively
            r = 0.0 if not np.isfinite(r) else r
        else:
            r, pv = result
        name = names[i]
        if abs(r) > abs(best_stat[name]):
            best_stat[name] = r
        best_p[name] = min(best_p[name], pv)
        if pv < alpha:
            selected.add(name)

    diagnostics = {}
    for name in panel.feature_names:
        i = names.index(name)
        had_link = any(link[0] == i for link in parents[0])
        if had_link:
            diagnostics[name] = (best_stat[name], best_p[name])
        else:
            # removed in stage one: report its screening record
            stats = [
                stat1[0][link]
                for link in candidates
                if link[0] == i and np.isfinite(stat1[0].get(link, np.inf))
            ]
            ps = [pval1[0][link] for link in candidates if link[0] == i]
            diagnostics[name] = (
                max(stats) if stats else 0.0,
                min(ps) if ps else 1.0,
            )
    return FeatureSet(frozenset(selected), diagnostics, "pcmci")
