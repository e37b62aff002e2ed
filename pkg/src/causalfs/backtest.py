"""Fixed-start expanding-window forecasting loop.

Each month the engine re-selects features on the window seen so far (or
reuses the last set, on a configurable cadence), fits OLS of next-month
target on [intercept, target lag, selected feature lags], predicts one step
ahead, and appends to the ledger. Selection and fitting only ever see rows
strictly before the predicted month.
"""
from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import BacktestAborted
from .ingest import Regime, RegimeCalendar
from .numerics import OlsFit, ols_fit
from .panel import AlignedPanel, MonthStamp, build_design
from .selectors import make_selector
from .selectors.base import FeatureSet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BacktestConfig:
    window: int = 60
    p: int = 1
    selector_id: str = "granger"
    selector_params: dict = field(default_factory=dict)
    reselect_every: int = 1
    seed: int = 0
    selector_timeout: float | None = None  # seconds; None disables

    def __post_init__(self):
        if self.window <= self.p + 2:
            raise ValueError("window must exceed p + 2")
        if self.reselect_every < 1:
            raise ValueError("reselect_every must be >= 1")

    def snapshot(self) -> dict:
        return {
            "window": self.window,
            "p": self.p,
            "selector_id": self.selector_id,
            "selector_params": dict(self.selector_params),
            "reselect_every": self.reselect_every,
            "seed": self.seed,
            "selector_timeout": self.selector_timeout,
        }


@dataclass(frozen=True)
class LedgerRecord:
    date: MonthStamp
    y_true: float
    y_pred: float
    selected: tuple[str, ...]
    regime: Regime


@dataclass(frozen=True)
class BacktestLedger:
    records: tuple[LedgerRecord, ...]
    config: dict

    def __len__(self) -> int:
        return len(self.records)

    @property
    def dates(self) -> tuple[MonthStamp, ...]:
        return tuple(r.date for r in self.records)

    @property
    def y_true(self) -> np.ndarray:
        return np.array([r.y_true for r in self.records])

    @property
    def y_pred(self) -> np.ndarray:
        return np.array([r.y_pred for r in self.records])

    @property
    def errors(self) -> np.ndarray:
        return self.y_true - self.y_pred


def forecast_next(fit: OlsFit, regressors) -> float:
    """One-step forecast: intercept plus the dot product with the fit."""
    return fit.predict(np.asarray(regressors, dtype=float))


def step_seed(seed: int, step: int) -> int:
    """Per-step selector seed, stable across platforms and rerun order."""
    return int(np.random.SeedSequence([seed, step]).generate_state(1)[0])


def fit_forecast_model(
    panel: AlignedPanel, p: int, selected: tuple[str, ...]
) -> tuple[OlsFit, np.ndarray]:
    """Fit the forecasting OLS on the window and build the next-step
    regressor vector from the window's final rows."""
    design = build_design(panel, p)
    cols = [0] + design.feature_column_indices(selected)
    fit = ols_fit(design.X[:, cols], design.y, intercept=True)
    T = len(panel)
    regressors = [panel.target[T - 1]]
    for name in selected:
        j = panel.feature_names.index(name)
        regressors.extend(panel.features[T - lag, j] for lag in range(1, p + 1))
    return fit, np.array(regressors)


def _run_with_timeout(fn, timeout, *args):
    if timeout is None:
        return fn(*args)
    # wait=False so the timed-out worker cannot stall the loop; it finishes
    # in the background and its result is discarded
    pool = concurrent.futures.ThreadPoolExecutor(max_workers=1)
    try:
        future = pool.submit(fn, *args)
        return future.result(timeout=timeout)
    finally:
        pool.shutdown(wait=False, cancel_futures=True)


def run_backtest(
    panel: AlignedPanel, calendar: RegimeCalendar, config: BacktestConfig
) -> BacktestLedger:
    """Produce one out-of-sample record per month after the initial window.

    Selector failures (or timeouts, when configured) fall back to the
    previous FeatureSet -- or to no features at the start -- with a logged
    warning; an empty selection degrades the model to intercept plus target
    lag. Hard data errors propagate.
    """
    T = len(panel)
    w = config.window
    if T <= w + 1:
        raise ValueError(f"panel length {T} must exceed window+1={w + 1}")
    selector = make_selector(config.selector_id, config.selector_params)
    records = []
    last_fs: FeatureSet | None = None
    for j in range(w, T):
        window = panel.head(j)
        due = last_fs is None or (j - w) % config.reselect_every == 0
        if due:
            try:
                fs = _run_with_timeout(
                    selector,
                    config.selector_timeout,
                    window,
                    config.p,
                    step_seed(config.seed, j),
                    calendar,
                )
            except concurrent.futures.TimeoutError:
                log.warning(
                    "%s timed out at %s; reusing previous selection",
                    config.selector_id, panel.dates[j],
                )
                fs = last_fs
            except Exception as exc:  # noqa: BLE001 -- fallback is the contract
                log.warning(
                    "%s failed at %s (%s); falling back",
                    config.selector_id, panel.dates[j], exc,
                )
                fs = last_fs
            if fs is None:
                fs = FeatureSet(frozenset(), {}, config.selector_id)
            last_fs = fs
        selected = last_fs.ordered(panel.feature_names)
        date = panel.dates[j]
        try:
            fit, regressors = fit_forecast_model(window, config.p, selected)
            y_pred = forecast_next(fit, regressors)
        except Exception as exc:
            raise BacktestAborted(
                f"hard error at {date}: {exc}",
                partial=BacktestLedger(tuple(records), config.snapshot()),
                cause=exc,
            ) from exc
        records.append(
            LedgerRecord(
                date=date,
                y_true=float(panel.target[j]),
                y_pred=float(y_pred),
                selected=selected,
                regime=calendar.classify(date),
            )
        )
    return BacktestLedger(tuple(records), config.snapshot())


# --- serialization ---

def ledger_to_csv(ledger: BacktestLedger) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["date", "y_true", "y_pred", "regime", "selected"])
    for r in ledger.records:
        writer.writerow(
            [str(r.date), repr(r.y_true), repr(r.y_pred), str(r.regime),
             ";".join(r.selected)]
        )
    return buf.getvalue()


def ledger_from_csv(text: str, config: dict | None = None) -> BacktestLedger:
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r]
    if not rows or rows[0] != ["date", "y_true", "y_pred", "regime", "selected"]:
        raise ValueError("not a ledger CSV")
    records = []
    for row in rows[1:]:
        date, y_true, y_pred, regime, selected = row
        records.append(
            LedgerRecord(
                date=MonthStamp.parse(date),
                y_true=float(y_true),
                y_pred=float(y_pred),
                selected=tuple(s for s in selected.split(";") if s),
                regime=Regime(regime),
            )
        )
    return BacktestLedger(tuple(records), config or {})


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def run_manifest(ledger: BacktestLedger) -> dict:
    return {
        "config": ledger.config,
        "config_sha256": config_hash(ledger.config),
        "n_records": len(ledger),
        "first_date": str(ledger.records[0].date) if ledger.records else None,
        "last_date": str(ledger.records[-1].date) if ledger.records else None,
    }
