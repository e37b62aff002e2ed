"""Parsers for the supported text formats plus the FRED-MD transforms.

Formats handled here:
  * FRED-MD CSV  -- header ``sasdate,<name>,...``, second row ``Transform:``
    with per-series codes, dates ``M/D/YYYY``, empty cells = missing;
  * price CSV    -- header ``date,close`` with ISO dates;
  * group sidecar CSV -- ``series,group`` with group in 1..8;
  * crisis calendar  -- one ``YYYY-MM..YYYY-MM`` range per line, ``#`` comments;
  * aligned-panel CSV -- the output schema of the ingest command.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadRange,
    BadTransformCode,
    DomainError,
    DuplicateDate,
    MalformedCsv,
    OverlappingRanges,
    UnknownSeries,
)
from .panel import AlignedPanel, MonthStamp, MonthlyPanel, MonthlySeries

# FRED-MD transformation codes and the length each one consumes.
#   1 level, 2 first diff, 3 second diff, 4 log, 5 log first diff,
#   6 log second diff, 7 first diff of percent change
TCODE_ORDER = {1: 0, 2: 1, 3: 2, 4: 0, 5: 1, 6: 2, 7: 2}

STOCK_MARKET_GROUP = 6  # excluded: target return lags already cover equities


def validate_tcode(code: int) -> int:
    if code not in TCODE_ORDER:
        raise BadTransformCode(f"unknown transform code {code!r}")
    return code


class Regime(enum.Enum):
    NORMAL = "normal"
    CRISIS = "crisis"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class RegimeCalendar:
    """Sorted, non-overlapping inclusive month ranges labelled crisis."""

    crisis_ranges: tuple[tuple[MonthStamp, MonthStamp], ...]

    def __post_init__(self):
        ranges = tuple(sorted(self.crisis_ranges, key=lambda r: r[0]))
        for start, end in ranges:
            if start > end:
                raise BadRange(f"range {start}..{end} has start after end")
        for (_, prev_end), (next_start, _) in zip(ranges, ranges[1:]):
            if next_start <= prev_end:
                raise OverlappingRanges(
                    f"range starting {next_start} overlaps one ending {prev_end}"
                )
        object.__setattr__(self, "crisis_ranges", ranges)

    def classify(self, month: MonthStamp) -> Regime:
        for start, end in self.crisis_ranges:
            if start <= month <= end:
                return Regime.CRISIS
        return Regime.NORMAL


def _parse_us_date(text: str) -> MonthStamp:
    parts = text.strip().split("/")
    if len(parts) != 3:
        raise MalformedCsv(f"expected M/D/YYYY date, got {text!r}")
    month, _, year = parts
    return MonthStamp(int(year), int(month))


def _cell_to_float(cell: str) -> float:
    cell = cell.strip()
    return math.nan if cell == "" else float(cell)


def parse_groups(csv_text: str) -> dict[str, int]:
    """Parse the ``series,group`` sidecar."""
    reader = csv.reader(io.StringIO(csv_text))
    rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows or [c.strip().lower() for c in rows[0][:2]] != ["series", "group"]:
        raise MalformedCsv("group sidecar must start with header 'series,group'")
    groups = {}
    for row in rows[1:]:
        if len(row) < 2:
            raise MalformedCsv(f"short row in group sidecar: {row!r}")
        name, tag = row[0].strip(), row[1].strip()
        try:
            tag_i = int(tag)
        except ValueError:
            raise MalformedCsv(f"non-integer group {tag!r} for series {name}")
        if not 1 <= tag_i <= 8:
            raise MalformedCsv(f"group {tag_i} for {name} outside 1..8")
        groups[name] = tag_i
    return groups


def parse_fredmd(
    csv_text: str, groups_csv: str
) -> tuple[MonthlyPanel, dict[str, int], dict[str, int]]:
    """Parse a FRED-MD-format CSV plus its group sidecar.

    Returns the raw (still untransformed, NaN-bearing) panel, the per-series
    transform codes for the kept series, and the group tags for every series
    in the file. Series tagged with the stock-market group are dropped from
    the panel and the code map but stay in the group map so callers can log
    the exclusion.
    """
    sidecar = parse_groups(groups_csv)
    reader = csv.reader(io.StringIO(csv_text))
    rows = [r for r in reader if r and any(c.strip() for c in r)]
    if len(rows) < 3:
        raise MalformedCsv("need a header, a transform row, and data")
    header = rows[0]
    names = [c.strip() for c in header[1:]]
    if not names:
        raise MalformedCsv("no series columns found")
    trow = rows[1]
    if not trow or not trow[0].strip().lower().startswith("transform"):
        raise MalformedCsv("second row must carry the transform codes")
    if len(trow) != len(header):
        raise MalformedCsv("transform row width differs from header")
    tcodes = {}
    for name, cell in zip(names, trow[1:]):
        try:
            code = int(float(cell))
        except ValueError:
            raise BadTransformCode(f"unreadable transform code {cell!r} for {name}")
        tcodes[name] = validate_tcode(code)
    dates = []
    data = []
    for row in rows[2:]:
        if len(row) != len(header):
            raise MalformedCsv(f"ragged row of width {len(row)}: {row[:3]}...")
        dates.append(_parse_us_date(row[0]))
        data.append([_cell_to_float(c) for c in row[1:]])
    groups = {}
    for name in names:
        if name not in sidecar:
            raise UnknownSeries(f"series {name} missing from group sidecar")
        groups[name] = sidecar[name]
    keep = [i for i, name in enumerate(names) if groups[name] != STOCK_MARKET_GROUP]
    kept_names = tuple(names[i] for i in keep)
    values = np.array(data, dtype=float)[:, keep]
    panel = MonthlyPanel(
        dates=tuple(dates),
        values=values,
        names=kept_names,
        groups=tuple(groups[n] for n in kept_names),
    )
    return panel, {n: tcodes[n] for n in kept_names}, groups


def apply_tcode(series: np.ndarray, code: int) -> np.ndarray:
    """Apply one FRED-MD transform; the output is shorter by its order.

    Interior NaN propagate through differences; the positivity requirement
    of the log-based codes is checked on the non-NaN values only.
    """
    validate_tcode(code)
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be 1-d")
    if len(x) <= TCODE_ORDER[code]:
        raise DomainError(f"series too short for transform {code}")
    if code >= 4:
        finite = x[~np.isnan(x)]
        if (finite <= 0).any():
            raise DomainError(f"transform {code} needs strictly positive values")
    if code == 1:
        return x.copy()
    if code == 2:
        return np.diff(x)
    if code == 3:
        return np.diff(x, n=2)
    if code == 4:
        return np.log(x)
    if code == 5:
        return np.diff(np.log(x))
    if code == 6:
        return np.diff(np.log(x), n=2)
    # code 7: first difference of the percent change
    pct = x[1:] / x[:-1] - 1.0
    return np.diff(pct)


def transform_panel(panel: MonthlyPanel, tcodes: dict[str, int]) -> MonthlyPanel:
    """Transform every series, NaN-padding the consumed leading months so the
    panel keeps one rectangular date column."""
    out = np.full_like(panel.values, np.nan)
    for j, name in enumerate(panel.names):
        code = tcodes[name]
        order = TCODE_ORDER[validate_tcode(code)]
        out[order:, j] = apply_tcode(panel.values[:, j], code)
    return MonthlyPanel(panel.dates, out, panel.names, panel.groups)


def load_prices(csv_text: str) -> MonthlySeries:
    """Parse the ``date,close`` price CSV; one row per month expected."""
    reader = csv.reader(io.StringIO(csv_text))
    rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows or [c.strip().lower() for c in rows[0][:2]] != ["date", "close"]:
        raise MalformedCsv("price CSV must start with header 'date,close'")
    months = []
    values = []
    for row in rows[1:]:
        if len(row) < 2:
            raise MalformedCsv(f"short price row: {row!r}")
        date = row[0].strip()
        parts = date.split("-")
        if len(parts) != 3:
            raise MalformedCsv(f"expected ISO YYYY-MM-DD date, got {date!r}")
        stamp = MonthStamp(int(parts[0]), int(parts[1]))
        if stamp in months:
            raise DuplicateDate(f"two price rows for month {stamp}")
        months.append(stamp)
        values.append(float(row[1]))
    return MonthlySeries(tuple(months), np.array(values))


def prices_to_returns(prices: MonthlySeries) -> MonthlySeries:
    """Simple monthly returns in percent: 100 * (P_t / P_{t-1} - 1)."""
    p = prices.values
    if (~np.isfinite(p)).any() or (p <= 0).any():
        raise DomainError("prices must be finite and strictly positive")
    r = 100.0 * (p[1:] / p[:-1] - 1.0)
    return MonthlySeries(prices.dates[1:], r)


def load_calendar(text: str) -> RegimeCalendar:
    """Parse the crisis calendar: ``YYYY-MM..YYYY-MM`` lines, ``#`` comments."""
    ranges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ".." not in line:
            raise BadRange(f"line {lineno}: expected YYYY-MM..YYYY-MM, got {raw!r}")
        a, b = line.split("..", 1)
        try:
            start, end = MonthStamp.parse(a), MonthStamp.parse(b)
        except ValueError as exc:
            raise BadRange(f"line {lineno}: {exc}")
        ranges.append((start, end))
    return RegimeCalendar(tuple(ranges))


# --- aligned-panel round trip (output schema of the ingest command) ---

def panel_to_csv(panel: AlignedPanel) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["month", panel.target_name, *panel.feature_names])
    for i, d in enumerate(panel.dates):
        writer.writerow(
            [str(d), repr(float(panel.target[i])),
             *[repr(float(v)) for v in panel.features[i]]]
        )
    return buf.getvalue()


def panel_meta(panel: AlignedPanel) -> dict:
    return {
        "target_name": panel.target_name,
        "feature_groups": list(panel.feature_groups),
        "returns_x100": panel.returns_x100,
    }


def panel_from_csv(csv_text: str, meta: dict | None = None) -> AlignedPanel:
    reader = csv.reader(io.StringIO(csv_text))
    rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows or rows[0][0].strip() != "month":
        raise MalformedCsv("panel CSV must start with a 'month' column")
    header = rows[0]
    target_name = header[1]
    names = tuple(header[2:])
    dates = []
    target = []
    feats = []
    for row in rows[1:]:
        if len(row) != len(header):
            raise MalformedCsv(f"ragged panel row: {row[:3]}...")
        dates.append(MonthStamp.parse(row[0]))
        target.append(float(row[1]))
        feats.append([float(c) for c in row[2:]])
    meta = meta or {}
    return AlignedPanel(
        dates=tuple(dates),
        target=np.array(target),
        features=np.array(feats),
        feature_names=names,
        feature_groups=tuple(meta.get("feature_groups", ())),
        target_name=meta.get("target_name", target_name),
        returns_x100=bool(meta.get("returns_x100", True)),
    )


def write_panel(panel: AlignedPanel, csv_path, meta_path) -> None:
    with open(csv_path, "w") as fh:
        fh.write(panel_to_csv(panel))
    with open(meta_path, "w") as fh:
        json.dump(panel_meta(panel), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_panel(csv_path, meta_path=None) -> AlignedPanel:
    with open(csv_path) as fh:
        text = fh.read()
    meta = None
    if meta_path is not None:
        try:
            with open(meta_path) as fh:
                meta = json.load(fh)
        except FileNotFoundError:
            meta = None
    return panel_from_csv(text, meta)
