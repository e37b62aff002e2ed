"""Date-indexed monthly panels, lag construction, and look-ahead-safe alignment.

Everything downstream (selectors, backtest) consumes the two container types
built here: :class:`AlignedPanel` for raw series and :class:`DesignMatrix`
for lag-augmented regressions. Both are immutable after construction and
reject NaN, so look-ahead reasoning stays simple.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import (
    DuplicateDate,
    InsufficientHistory,
    NoOverlap,
    NonContiguous,
)

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")


@dataclass(frozen=True, order=True)
class MonthStamp:
    """A calendar month. Totally ordered; arithmetic rolls the year."""

    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month must be in 1..12, got {self.month}")

    def plus(self, months: int) -> "MonthStamp":
        total = self.year * 12 + (self.month - 1) + months
        return MonthStamp(total // 12, total % 12 + 1)

    def successor(self) -> "MonthStamp":
        return self.plus(1)

    def index(self) -> int:
        """Months since year 0; differences give month counts."""
        return self.year * 12 + self.month - 1

    @classmethod
    def parse(cls, text: str) -> "MonthStamp":
        m = _MONTH_RE.match(text.strip())
        if m is None:
            raise ValueError(f"expected YYYY-MM, got {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def _check_dates(dates) -> tuple[MonthStamp, ...]:
    dates = tuple(dates)
    seen = set()
    for d in dates:
        if d in seen:
            raise DuplicateDate(f"month {d} appears twice")
        seen.add(d)
    return dates


@dataclass(frozen=True)
class MonthlySeries:
    """A single dated series. NaN allowed (resolved later by alignment)."""

    dates: tuple[MonthStamp, ...]
    values: np.ndarray

    def __post_init__(self):
        dates = _check_dates(self.dates)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or len(dates) != values.shape[0]:
            raise ValueError("dates and values must be equal-length 1-d")
        order = np.argsort([d.index() for d in dates], kind="stable")
        dates = tuple(dates[i] for i in order)
        values = values[order].copy()
        values.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class MonthlyPanel:
    """Several dated series sharing one date column. NaN allowed."""

    dates: tuple[MonthStamp, ...]
    values: np.ndarray  # T x d
    names: tuple[str, ...]
    groups: tuple[int, ...] = ()

    def __post_init__(self):
        dates = _check_dates(self.dates)
        values = np.asarray(self.values, dtype=float)
        names = tuple(self.names)
        if values.ndim != 2:
            raise ValueError("values must be 2-d (T x d)")
        if values.shape != (len(dates), len(names)):
            raise ValueError("shape mismatch between dates, names, values")
        groups = tuple(self.groups) if self.groups else (0,) * len(names)
        if len(groups) != len(names):
            raise ValueError("one group tag per series required")
        order = np.argsort([d.index() for d in dates], kind="stable")
        dates = tuple(dates[i] for i in order)
        values = values[order].copy()
        values.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "groups", groups)

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class AlignedPanel:
    """Post-shift, post-join panel of target plus features.

    Invariants enforced at construction: dates strictly increasing with no
    gaps, equal row counts, and no NaN anywhere. ``returns_x100`` records
    whether the target is stored in percent.
    """

    dates: tuple[MonthStamp, ...]
    target: np.ndarray
    features: np.ndarray  # T x d
    feature_names: tuple[str, ...]
    feature_groups: tuple[int, ...] = ()
    target_name: str = "TARGET"
    returns_x100: bool = True

    def __post_init__(self):
        dates = tuple(self.dates)
        target = np.asarray(self.target, dtype=float).copy()
        features = np.asarray(self.features, dtype=float).copy()
        names = tuple(self.feature_names)
        groups = tuple(self.feature_groups) if self.feature_groups else (0,) * len(names)
        if features.ndim != 2:
            raise ValueError("features must be 2-d (T x d)")
        if not (len(dates) == target.shape[0] == features.shape[0]):
            raise ValueError("dates, target, features must share row count")
        if features.shape[1] != len(names) or len(groups) != len(names):
            raise ValueError("one name and group per feature column required")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if self.target_name in names:
            raise ValueError("target name collides with a feature name")
        for a, b in zip(dates, dates[1:]):
            if b != a.successor():
                raise NonContiguous(f"gap or disorder between {a} and {b}")
        if len(dates) == 0:
            raise NoOverlap("empty panel")
        if np.isnan(target).any() or np.isnan(features).any():
            raise ValueError("NaN forbidden in an aligned panel")
        target.setflags(write=False)
        features.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "feature_groups", groups)

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def head(self, n: int) -> "AlignedPanel":
        """First ``n`` rows; the training window view used by the backtest."""
        if not 1 <= n <= len(self):
            raise ValueError(f"head({n}) outside 1..{len(self)}")
        return AlignedPanel(
            self.dates[:n],
            self.target[:n],
            self.features[:n],
            self.feature_names,
            self.feature_groups,
            self.target_name,
            self.returns_x100,
        )

    def column(self, name: str) -> np.ndarray:
        return self.features[:, self.feature_names.index(name)]


@dataclass(frozen=True)
class DesignMatrix:
    """Lag-augmented regression design with column provenance.

    Column 0 is the target at lag 1; each feature contributes its lags
    1..p as a contiguous block. Every regressor in the row for date t is a
    panel value stamped strictly before t.
    """

    dates: tuple[MonthStamp, ...]
    y: np.ndarray
    X: np.ndarray
    columns: tuple[tuple[str, int], ...]  # (source_name, lag)
    target_name: str
    p: int = 1

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).copy()
        X = np.asarray(self.X, dtype=float).copy()
        if X.shape != (len(self.dates), len(self.columns)) or y.shape[0] != X.shape[0]:
            raise ValueError("design shape mismatch")
        y.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def feature_names(self) -> tuple[str, ...]:
        seen = []
        for name, _ in self.columns:
            if name != self.target_name and name not in seen:
                seen.append(name)
        return tuple(seen)

    def feature_column_indices(self, names) -> list[int]:
        """Design column indices holding any lag of the given features."""
        wanted = set(names)
        return [i for i, (name, _) in enumerate(self.columns) if name in wanted]

    @property
    def n(self) -> int:
        return self.X.shape[0]


def align_and_shift(
    target: MonthlySeries,
    features: MonthlyPanel,
    shift_months: int = 1,
    target_name: str = "TARGET",
    returns_x100: bool = True,
) -> AlignedPanel:
    """Re-stamp features forward and inner-join them with the target.

    A feature row originally stamped month m is treated as information for
    month m + shift_months, then joined with the target on month. Rows
    carrying any NaN are dropped; the surviving dates must be contiguous.

    Raises NoOverlap if the join is empty and DuplicateDate if either input
    repeats a month (checked at input construction).
    """
    if shift_months < 0:
        raise ValueError("shift_months must be >= 0")
    feat_by_month = {
        d.plus(shift_months): i for i, d in enumerate(features.dates)
    }
    rows = []
    months = []
    tvals = []
    for i, d in enumerate(target.dates):
        j = feat_by_month.get(d)
        if j is None:
            continue
        trow = target.values[i]
        frow = features.values[j]
        if np.isnan(trow) or np.isnan(frow).any():
            continue
        months.append(d)
        tvals.append(trow)
        rows.append(frow)
    if not months:
        raise NoOverlap("no month with complete target and feature data")
    return AlignedPanel(
        dates=tuple(months),
        target=np.array(tvals),
        features=np.vstack(rows),
        feature_names=features.names,
        feature_groups=features.groups,
        target_name=target_name,
        returns_x100=returns_x100,
    )


def build_design(panel: AlignedPanel, p: int = 1) -> DesignMatrix:
    """Build the lag-p design: y_t on [Y_{t-1}, X_{i,t-1..t-p} for all i].

    The first p panel rows are consumed as history only, so the result has
    exactly T - p rows.
    """
    if p < 1:
        raise ValueError("lag order p must be >= 1")
    T = len(panel)
    if T <= p + 1:
        raise InsufficientHistory(f"need more than p+1={p + 1} rows, have {T}")
    cols: list[tuple[str, int]] = [(panel.target_name, 1)]
    for name in panel.feature_names:
        cols.extend((name, lag) for lag in range(1, p + 1))
    n = T - p
    X = np.empty((n, len(cols)))
    X[:, 0] = panel.target[p - 1 : T - 1]
    k = 1
    for j in range(panel.n_features):
        for lag in range(1, p + 1):
            X[:, k] = panel.features[p - lag : T - lag, j]
            k += 1
    y = panel.target[p:T]
    return DesignMatrix(
        dates=panel.dates[p:T],
        y=y,
        X=X,
        columns=tuple(cols),
        target_name=panel.target_name,
        p=p,
    )
