"""Batch entry point: ingest, backtest, report, validate.

Exit codes: 0 ok, 2 config/input error, 3 missing artifact, 4 generation
failure. All outputs are plot-ready CSV/JSON under the configured output
directory; input files are never modified.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import evaluation, synthlab
from .backtest import (
    BacktestConfig,
    ledger_from_csv,
    ledger_to_csv,
    run_backtest,
    run_manifest,
)
from .config import ConfigError, RunConfig, load_config_file, load_run_config
from .errors import BacktestAborted, CausalfsError, GenerationFailed
from .ingest import (
    STOCK_MARKET_GROUP,
    Regime,
    RegimeCalendar,
    load_calendar,
    load_prices,
    parse_fredmd,
    prices_to_returns,
    read_panel,
    transform_panel,
    write_panel,
)
from .panel import align_and_shift
from .selectors import make_selector
from .selectors.base import SELECTOR_IDS

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_GENERATION = 4


def _load_calendar_from(cfg: RunConfig) -> RegimeCalendar:
    if cfg.calendar is None:
        return RegimeCalendar(())
    return load_calendar(cfg.resolve("calendar").read_text())


def cmd_ingest(cfg: RunConfig) -> int:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    fredmd_text = cfg.resolve("fredmd_csv").read_text()
    groups_text = cfg.resolve("groups_csv").read_text()
    prices_text = cfg.resolve("prices_csv").read_text()
    raw_panel, tcodes, groups = parse_fredmd(fredmd_text, groups_text)
    transformed = transform_panel(raw_panel, tcodes)
    returns = prices_to_returns(load_prices(prices_text))
    panel = align_and_shift(
        returns, transformed,
        shift_months=cfg.shift_months,
        target_name=cfg.target_name,
        returns_x100=True,
    )
    write_panel(panel, out / "panel.csv", out / "panel_meta.json")
    dropped = len(returns) - len(panel)
    ingest_log = {
        "rows": len(panel),
        "first_month": str(panel.dates[0]),
        "last_month": str(panel.dates[-1]),
        "target_rows_dropped": dropped,
        "series_kept": list(panel.feature_names),
        "series_excluded_stock_group": sorted(
            n for n, g in groups.items() if g == STOCK_MARKET_GROUP
        ),
        "shift_months": cfg.shift_months,
    }
    (out / "ingest_log.json").write_text(json.dumps(ingest_log, indent=2) + "\n")
    print(f"wrote {out / 'panel.csv'} ({len(panel)} rows)")
    return EXIT_OK


def cmd_backtest(cfg: RunConfig) -> int:
    out = cfg.out_dir
    panel_path = out / "panel.csv"
    if not panel_path.exists():
        print(f"missing artifact: {panel_path} (run ingest first)", file=sys.stderr)
        return EXIT_MISSING
    panel = read_panel(panel_path, out / "panel_meta.json")
    calendar = _load_calendar_from(cfg)
    for sid in cfg.selectors:
        bt = BacktestConfig(
            window=cfg.window,
            p=cfg.p,
            selector_id=sid,
            selector_params=cfg.selector_params.get(sid, {}),
            reselect_every=cfg.reselect_every,
            seed=cfg.seed,
            selector_timeout=cfg.selector_timeout,
        )
        ledger_path = out / f"ledger_{sid}.csv"
        try:
            ledger = run_backtest(panel, calendar, bt)
        except BacktestAborted as exc:
            partial = ledger_path.with_suffix(".csv.partial")
            partial.write_text(ledger_to_csv(exc.partial) if exc.partial else "")
            print(f"selector {sid} aborted: {exc}", file=sys.stderr)
            return 1
        except Exception as exc:
            print(f"selector {sid} crashed: {exc}", file=sys.stderr)
            return EXIT_GENERATION if isinstance(exc, GenerationFailed) else 1
        ledger_path.write_text(ledger_to_csv(ledger))
        (out / f"manifest_{sid}.json").write_text(
            json.dumps(run_manifest(ledger), indent=2, sort_keys=True) + "\n"
        )
        print(f"wrote {ledger_path} ({len(ledger)} records)")
    return EXIT_OK


def _fmt(value) -> str:
    return "" if value is None else repr(round(float(value), 10))


def cmd_report(cfg: RunConfig) -> int:
    out = cfg.out_dir
    calendar = _load_calendar_from(cfg)
    ledgers = {}
    for sid in cfg.selectors:
        path = out / f"ledger_{sid}.csv"
        if not path.exists():
            print(f"missing artifact: {path}", file=sys.stderr)
            return EXIT_MISSING
        ledgers[sid] = ledger_from_csv(path.read_text())

    table1 = io.StringIO()
    w1 = csv.writer(table1, lineterminator="\n")
    w1.writerow(
        ["model", "mae_normal", "mae_crisis", "rmse_normal", "rmse_crisis",
         "mae_increase_pct"]
    )
    table2 = io.StringIO()
    w2 = csv.writer(table2, lineterminator="\n")
    w2.writerow(
        ["model", "er_normal", "er_crisis", "sharpe_normal", "sharpe_crisis",
         "sortino_normal", "sortino_crisis"]
    )

    def error_row(name, report):
        normal = report.regime(Regime.NORMAL)
        crisis = report.regime(Regime.CRISIS)
        w1.writerow([
            name,
            _fmt(normal.mae if normal else None),
            _fmt(crisis.mae if crisis else None),
            _fmt(normal.rmse if normal else None),
            _fmt(crisis.rmse if crisis else None),
            _fmt(report.mae_increase_pct),
        ])

    def portfolio_row(name, stats):
        normal = stats.get(Regime.NORMAL)
        crisis = stats.get(Regime.CRISIS)
        w2.writerow([
            name,
            _fmt(normal.expected_return if normal else None),
            _fmt(crisis.expected_return if crisis else None),
            _fmt(normal.sharpe if normal else None),
            _fmt(crisis.sharpe if crisis else None),
            _fmt(normal.sortino if normal else None),
            _fmt(crisis.sortino if crisis else None),
        ])

    strategies = {}
    metrics_json = {}
    for sid, ledger in ledgers.items():
        report = evaluation.regime_metrics(ledger, calendar)
        error_row(sid, report)
        series = evaluation.strategy_returns(ledger)
        strategies[sid] = series
        portfolio_row(sid, evaluation.portfolio_metrics(series, calendar))
        dates, values = evaluation.rolling_rmse(ledger, cfg.metric_window)
        (out / f"rolling_rmse_{sid}.csv").write_text(
            evaluation.series_to_csv(dates, values)
        )
        dates, values = evaluation.rolling_mae(ledger, cfg.metric_window)
        (out / f"rolling_mae_{sid}.csv").write_text(
            evaluation.series_to_csv(dates, values)
        )
        (out / f"stability_{sid}.csv").write_text(evaluation.stability_to_csv(ledger))
        metrics_json[sid] = {
            "errors": {
                str(regime): {"mae": e.mae, "rmse": e.rmse, "count": e.count}
                for regime, e in report.per_regime.items()
            },
            "mae_increase_pct": report.mae_increase_pct,
        }

    if cfg.combine:
        a, b = cfg.combine
        if a in strategies and b in strategies:
            combined = evaluation.combine_portfolios(
                strategies[a], strategies[b], cfg.combine_weight
            )
            portfolio_row(f"combined({a},{b})", evaluation.portfolio_metrics(combined, calendar))
            (out / "combined_portfolio.csv").write_text(
                evaluation.series_to_csv(combined.dates, combined.returns)
            )
        else:
            print("combine refers to selectors without ledgers", file=sys.stderr)
            return EXIT_MISSING

    (out / "table1.csv").write_text(table1.getvalue())
    (out / "table2.csv").write_text(table2.getvalue())
    (out / "metrics.json").write_text(
        json.dumps(metrics_json, indent=2, sort_keys=True) + "\n"
    )
    print(f"wrote {out / 'table1.csv'} and {out / 'table2.csv'}")
    return EXIT_OK


def cmd_validate(spec_path: Path, out_dir: Path | None, seed_override) -> int:
    raw = load_config_file(spec_path)
    out = out_dir or Path(raw.pop("output_dir", "out"))
    if not out.is_absolute():
        out = spec_path.resolve().parent / out
    out.mkdir(parents=True, exist_ok=True)
    selectors = raw.pop("selectors", ["granger"])
    if isinstance(selectors, str):
        selectors = [selectors]
    n_seeds = int(raw.pop("n_seeds", 20))
    selector_params = raw.pop("selector", {})
    base_seed = int(seed_override if seed_override is not None else raw.pop("seed", 0))
    raw.pop("seed", None)
    shift_rows = raw.pop("environment_shifts", [])
    try:
        spec_kwargs = dict(
            d=int(raw.pop("d")),
            p=int(raw.pop("p", 1)),
            n=int(raw.pop("n", 500)),
            edge_density=float(raw.pop("edge_density", 0.2)),
            noise=raw.pop("noise", "gaussian"),
            instantaneous=bool(raw.pop("instantaneous", True)),
        )
        if "coefficient_low" in raw or "coefficient_high" in raw:
            spec_kwargs["coefficient_range"] = (
                float(raw.pop("coefficient_low", 0.3)),
                float(raw.pop("coefficient_high", 0.8)),
            )
        if "target_parents" in raw:
            spec_kwargs["target_parents"] = int(raw.pop("target_parents"))
        if "ar_coeff" in raw:
            spec_kwargs["ar_coeff"] = float(raw.pop("ar_coeff"))
        if raw:
            raise ConfigError(f"unknown validate keys: {sorted(raw)}")
    except KeyError as exc:
        print(f"validate spec missing key: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    shifts = tuple(
        synthlab.EnvShift(
            variable=str(row["variable"]),
            start_row=int(row["start_row"]),
            mean=float(row.get("mean", 0.0)),
            scale=float(row.get("scale", 1.0)),
        )
        for row in shift_rows
    )
    for sid in selectors:
        if sid not in SELECTOR_IDS:
            print(f"unknown selector id {sid!r}", file=sys.stderr)
            return EXIT_CONFIG
    p = spec_kwargs["p"]
    for sid in selectors:
        runner = make_selector(sid, selector_params.get(sid, {}))
        rows = []
        for k in range(n_seeds):
            spec = synthlab.SvarSpec(
                seed=base_seed + k, environment_shifts=shifts, **spec_kwargs
            )
            try:
                panel, truth = synthlab.generate_svar(spec)
            except GenerationFailed as exc:
                print(f"generation failed at seed {spec.seed}: {exc}", file=sys.stderr)
                return EXIT_GENERATION
            fs = runner(panel, p, spec.seed, None)
            score = synthlab.score_recovery(fs, truth)
            rows.append((spec.seed, score, len(fs)))
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["seed", "precision", "recall", "f1", "n_selected"])
        for seed, score, n_sel in rows:
            writer.writerow(
                [seed, repr(score.precision), repr(score.recall), repr(score.f1), n_sel]
            )
        mean_f1 = sum(s.f1 for _, s, _ in rows) / len(rows)
        mean_rate = sum(n for _, _, n in rows) / (len(rows) * (spec_kwargs["d"] - 1))
        writer.writerow(
            ["mean",
             repr(sum(s.precision for _, s, _ in rows) / len(rows)),
             repr(sum(s.recall for _, s, _ in rows) / len(rows)),
             repr(mean_f1),
             repr(mean_rate)]
        )
        (out / f"recovery_{sid}.csv").write_text(buf.getvalue())
        print(f"{sid}: mean F1 {mean_f1:.3f}, selection rate {mean_rate:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalfs",
        description="Causal feature selection and expanding-window forecasting",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_config in (
        ("ingest", True), ("backtest", True), ("report", True), ("validate", True),
    ):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=needs_config, help="run config file")
        cmd.add_argument("--seed", type=int, default=None, help="override the seed")
        cmd.add_argument("--out", default=None, help="override the output directory")
        cmd.add_argument(
            "--selectors", default=None,
            help="comma-separated selector ids, overriding the config",
        )
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            out = Path(args.out) if args.out else None
            return cmd_validate(Path(args.config), out, args.seed)
        cfg = load_run_config(args.config, require_inputs=args.command == "ingest")
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.output_dir = args.out
        if args.selectors is not None:
            cfg.selectors = [s.strip() for s in args.selectors.split(",") if s.strip()]
            for sid in cfg.selectors:
                if sid not in SELECTOR_IDS:
                    raise ConfigError(f"unknown selector id {sid!r}")
        handler = {"ingest": cmd_ingest, "backtest": cmd_backtest, "report": cmd_report}
        return handler[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CausalfsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
