import itertools
import math

import numpy as np
import pytest

from causalfs.panel import build_design
from causalfs.selectors import cv_mse, sfs_select

from conftest import make_panel


def naive_forward_path(design, folds, tol, max_features):
    """Independent greedy oracle: exhaustive candidate scan per step using
    only the public cv_mse helper signature recomputed from scratch."""

    def block_mse(names):
        cols = [0] + [
            i for i, (nm, _) in enumerate(design.columns) if nm in set(names)
        ]
        X = design.X[:, cols]
        y = design.y
        blocks = np.array_split(np.arange(len(y)), folds)
        losses = []
        for block in blocks:
            train = np.setdiff1d(np.arange(len(y)), block)
            A = np.column_stack([np.ones(len(train)), X[train]])
            beta, *_ = np.linalg.lstsq(A, y[train], rcond=None)
            Av = np.column_stack([np.ones(len(block)), X[block]])
            losses.append(float(((y[block] - Av @ beta) ** 2).mean()))
        return float(np.mean(losses))

    path = []
    current = []
    current_mse = block_mse(current)
    names = list(design.feature_names)
    while len(current) < max_features:
        scores = []
        for name in names:
            if name in current:
                continue
            scores.append((block_mse(current + [name]), names.index(name), name))
        if not scores:
            break
        best_mse, _, best_name = min(scores)
        if current_mse - best_mse < tol:
            break
        current.append(best_name)
        path.append(best_name)
        current_mse = best_mse
    return path, set(current)


def test_forward_matches_exhaustive_greedy_oracle(rng):
    n = 120
    feats = rng.normal(size=(n, 4))
    y = np.empty(n)
    y[0] = 0.0
    y[1:] = 1.2 * feats[:-1, 0] - 0.8 * feats[:-1, 2] + 0.3 * rng.normal(size=n - 1)
    design = build_design(make_panel(y, feats), 1)
    fs = sfs_select(design, direction="forward", tol=1e-8, folds=5)
    _, oracle_set = naive_forward_path(design, folds=5, tol=1e-8, max_features=4)
    assert set(fs.selected) == oracle_set


def test_perfect_feature_selected_first_then_stop(rng):
    n = 60
    feats = rng.normal(size=(n, 3))
    # feature X2 equals the target's next value exactly, lag-aligned
    y = np.empty(n)
    y[0] = 0.0
    y[1:] = feats[:-1, 1]
    design = build_design(make_panel(y, feats), 1)
    fs = sfs_select(design, direction="forward", tol=1e-10, folds=4)
    assert set(fs.selected) == {"X2"}
    assert cv_mse(design, ["X2"], 4) == pytest.approx(0.0, abs=1e-18)


def test_infinite_tol_gives_empty_set(rng):
    n = 50
    design = build_design(make_panel(rng.normal(size=n), rng.normal(size=(n, 3))), 1)
    fs = sfs_select(design, direction="forward", tol=math.inf)
    assert fs.selected == frozenset()


def test_backward_removes_pure_noise(rng):
    n = 240
    feats = rng.normal(size=(n, 4))
    y = np.empty(n)
    y[0] = 0.0
    y[1:] = 1.5 * feats[:-1, 0] + 0.2 * rng.normal(size=n - 1)
    design = build_design(make_panel(y, feats), 1)
    fs = sfs_select(design, direction="backward", tol=0.0, folds=5)
    assert "X1" in fs.selected


def test_max_features_cap(rng):
    n = 100
    feats = rng.normal(size=(n, 4))
    y = np.empty(n)
    y[0] = 0.0
    y[1:] = feats[:-1].sum(axis=1) + 0.1 * rng.normal(size=n - 1)
    design = build_design(make_panel(y, feats), 1)
    fs = sfs_select(design, direction="forward", tol=1e-8, max_features=2)
    assert len(fs.selected) == 2


def test_deterministic(rng):
    n = 90
    feats = rng.normal(size=(n, 4))
    y = rng.normal(size=n)
    design = build_design(make_panel(y, feats), 1)
    a = sfs_select(design, direction="forward", tol=1e-8, seed=1)
    b = sfs_select(design, direction="forward", tol=1e-8, seed=99)
    assert a.selected == b.selected  # block splits ignore the seed
