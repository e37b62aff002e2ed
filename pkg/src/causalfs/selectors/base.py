"""Shared selector output types and the selector registry."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import BadName


@dataclass(frozen=True)
class FeatureSet:
    """Outcome of one selector run.

    ``selected`` is a subset of the candidate feature names; ``diagnostics``
    maps every candidate to its (statistic, p-value-or-weight) pair.
    ``empty_informative`` marks emptiness that is itself a finding (an
    invariance rejection) rather than a lack of signal.
    """

    selected: frozenset[str]
    diagnostics: dict[str, tuple[float, float]]
    selector_id: str
    empty_informative: bool = False

    def __post_init__(self):
        object.__setattr__(self, "selected", frozenset(self.selected))
        missing = self.selected - set(self.diagnostics)
        if missing:
            raise ValueError(f"selected names missing diagnostics: {sorted(missing)}")

    def ordered(self, all_names) -> tuple[str, ...]:
        """Selected names in the panel's column order (deterministic output)."""
        return tuple(n for n in all_names if n in self.selected)

    def __contains__(self, name: str) -> bool:
        return name in self.selected

    def __len__(self) -> int:
        return len(self.selected)


@dataclass(frozen=True)
class Environment:
    """A labelled block of design rows used by invariance testing."""

    label: str
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=int).copy()
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class DynamicGraph:
    """Instantaneous matrix S and lag matrices W, row = source, col = dest.

    Also serves as the ground-truth type in the synthetic lab; ``h_value``
    is the acyclicity residual of S after fitting (0 for generated truths).
    """

    S: np.ndarray
    W: tuple[np.ndarray, ...]
    variable_names: tuple[str, ...]
    lambda_s: float = 0.0
    lambda_w: float = 0.0
    h_value: float = 0.0

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float).copy()
        W = tuple(np.asarray(w, dtype=float).copy() for w in self.W)
        d = len(self.variable_names)
        if S.shape != (d, d) or any(w.shape != (d, d) for w in W):
            raise ValueError("S and every W_tau must be d x d")
        S.setflags(write=False)
        for w in W:
            w.setflags(write=False)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "variable_names", tuple(self.variable_names))

    @property
    def p(self) -> int:
        return len(self.W)

    def index_of(self, name: str) -> int:
        try:
            return self.variable_names.index(name)
        except ValueError:
            raise BadName(f"unknown variable {name!r}")

    def parents_of(self, name: str) -> frozenset[str]:
        """Names with any nonzero edge into ``name`` (instantaneous or lagged)."""
        j = self.index_of(name)
        parents = set()
        for i, src in enumerate(self.variable_names):
            if src == name:
                continue
            if self.S[i, j] != 0 or any(w[i, j] != 0 for w in self.W):
                parents.add(src)
        return frozenset(parents)


SELECTOR_IDS = ("granger", "seqicp", "varlingam", "dynotears", "pcmci", "sfs")
