"""Greedy stepwise feature selection driven by cross-validated MSE."""
from __future__ import annotations

import math

import numpy as np

from ..errors import Underdetermined
from ..numerics import ols_fit
from ..panel import DesignMatrix
from .base import FeatureSet


def _block_folds(n: int, folds: int) -> list[np.ndarray]:
    """Contiguous, time-respecting validation blocks."""
    return [b for b in np.array_split(np.arange(n), folds) if len(b)]


def cv_mse(design: DesignMatrix, feature_names, folds: int) -> float:
    """Mean out-of-block MSE of the linear base model on the given features.

    The base model always carries the intercept and the target's own lag;
    candidate features add their lag columns on top.
    """
    cols = [0] + design.feature_column_indices(feature_names)
    X = design.X[:, cols]
    y = design.y
    losses = []
    for block in _block_folds(len(y), folds):
        train = np.setdiff1d(np.arange(len(y)), block)
        try:
            fit = ols_fit(X[train], y[train], intercept=True)
        except Underdetermined:
            return math.inf
        Xv = np.column_stack([np.ones(len(block)), X[block]])
        pred = Xv @ fit.beta
        losses.append(float(((y[block] - pred) ** 2).mean()))
    return float(np.mean(losses))


def sfs_select(
    design: DesignMatrix,
    direction: str = "forward",
    tol: float = 1e-8,
    max_features: int | None = None,
    folds: int = 5,
    seed: int = 0,
) -> FeatureSet:
    """Forward or backward stepwise search over the design's features.

    Forward starts empty and adds the feature whose inclusion most reduces
    the cross-validated MSE, stopping once the best improvement falls below
    ``tol`` or ``max_features`` is reached; backward removes symmetrically.
    Splits are contiguous blocks, so ``seed`` is accepted only for interface
    parity. Exact metric ties resolve to the lowest column index.
    """
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be forward or backward, got {direction!r}")
    names = list(design.feature_names)
    if max_features is None:
        max_features = len(names)
    if design.n <= max_features + 1:
        raise Underdetermined(f"{design.n} rows cannot support {max_features} features")
    diagnostics = {name: (0.0, math.inf) for name in names}

    if direction == "forward":
        current: list[str] = []
        current_mse = cv_mse(design, current, folds)
        while len(current) < max_features and len(current) < len(names):
            best_name, best_mse = None, math.inf
            for name in names:  # column order: first strict win takes ties
                if name in current:
                    continue
                mse = cv_mse(design, current + [name], folds)
                diagnostics[name] = (current_mse - mse, mse)
                if mse < best_mse:
                    best_name, best_mse = name, mse
            if best_name is None or current_mse - best_mse < tol:
                break
            current.append(best_name)
            current_mse = best_mse
        return FeatureSet(frozenset(current), diagnostics, "sfs")

    current = list(names)
    current_mse = cv_mse(design, current, folds)
    while current:
        best_name, best_mse = None, math.inf
        for name in current:
            trial = [n for n in current if n != name]
            mse = cv_mse(design, trial, folds)
            diagnostics[name] = (current_mse - mse, mse)
            if mse < best_mse:
                best_name, best_mse = name, mse
        improves = current_mse - best_mse >= tol
        over_cap = len(current) > max_features
        if best_name is None or not (improves or over_cap):
            break
        current.remove(best_name)
        current_mse = best_mse
    return FeatureSet(frozenset(current), diagnostics, "sfs")
