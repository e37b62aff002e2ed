import json

import numpy as np
import pytest

from causalfs.cli import main
from causalfs.config import load_run_config, parse_kv
from causalfs.errors import ConfigError
from causalfs.synthlab import SvarSpec, export_fredmd, generate_svar


@pytest.fixture
def workspace(tmp_path):
    """Toy data files plus a config, built from a synthetic panel."""
    panel, _ = generate_svar(
        SvarSpec(d=4, p=1, n=80, edge_density=0.3, seed=3, instantaneous=False)
    )
    fredmd_csv, groups_csv, prices_csv = export_fredmd(panel)
    (tmp_path / "fredmd.csv").write_text(fredmd_csv)
    (tmp_path / "groups.csv").write_text(groups_csv)
    (tmp_path / "prices.csv").write_text(prices_csv)
    (tmp_path / "crisis.txt").write_text("2003-01..2003-06\n")
    config = """
# toy run
fredmd_csv = "fredmd.csv"
prices_csv = "prices.csv"
groups_csv = "groups.csv"
calendar = "crisis.txt"
output_dir = "out"
window = 40
p = 1
metric_window = 6
shift_months = 0
seed = 7
target_name = "Y"
selectors = ["granger", "sfs"]
combine = ["granger", "sfs"]
combine_weight = 0.5

[selector.granger]
alpha = 0.1

[selector.sfs]
tol = 1e-6
max_features = 2
"""
    (tmp_path / "run.toml").write_text(config)
    return tmp_path


def run_cli(*args):
    return main([str(a) for a in args])


class TestConfigFormat:
    def test_kv_parsing(self):
        parsed = parse_kv(
            'a = 1\nb = "text" # comment\nc = [1, 2, 3]\nflag = true\n'
            "[sec.sub]\nx = 2.5\n"
        )
        assert parsed["a"] == 1
        assert parsed["b"] == "text"
        assert parsed["c"] == [1, 2, 3]
        assert parsed["flag"] is True
        assert parsed["sec"]["sub"]["x"] == 2.5

    def test_json_alternative(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"window": 30, "selectors": ["granger"]}))
        cfg = load_run_config(path)
        assert cfg.window == 30

    def test_unknown_selector_rejected(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text('selectors = ["nope"]\n')
        with pytest.raises(ConfigError):
            load_run_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("not_a_key = 1\n")
        with pytest.raises(ConfigError):
            load_run_config(path)


class TestIngest:
    def test_toy_run_exits_zero(self, workspace):
        assert run_cli("ingest", "--config", workspace / "run.toml") == 0
        out = workspace / "out"
        assert (out / "panel.csv").exists()
        assert (out / "panel_meta.json").exists()
        log = json.loads((out / "ingest_log.json").read_text())
        assert log["rows"] > 0

    def test_missing_file_exit_2(self, workspace):
        (workspace / "prices.csv").unlink()
        assert run_cli("ingest", "--config", workspace / "run.toml") == 2

    def test_group6_series_excluded(self, workspace):
        # tag X2 as the stock-market group; ingest must drop it and log it
        (workspace / "groups.csv").write_text(
            "series,group\nX1,1\nX2,6\nX3,2\n"
        )
        assert run_cli("ingest", "--config", workspace / "run.toml") == 0
        log = json.loads((workspace / "out" / "ingest_log.json").read_text())
        assert "X2" not in log["series_kept"]
        assert log["series_excluded_stock_group"] == ["X2"]
        header = (workspace / "out" / "panel.csv").read_text().splitlines()[0]
        assert "X2" not in header.split(",")

    def test_inputs_never_mutated(self, workspace):
        before = {
            name: (workspace / name).read_bytes()
            for name in ("fredmd.csv", "groups.csv", "prices.csv", "crisis.txt")
        }
        run_cli("ingest", "--config", workspace / "run.toml")
        run_cli("backtest", "--config", workspace / "run.toml")
        run_cli("report", "--config", workspace / "run.toml")
        for name, blob in before.items():
            assert (workspace / name).read_bytes() == blob


class TestBacktest:
    def test_before_ingest_exit_3(self, workspace):
        assert run_cli("backtest", "--config", workspace / "run.toml") == 3

    def test_ledgers_written(self, workspace):
        run_cli("ingest", "--config", workspace / "run.toml")
        assert run_cli("backtest", "--config", workspace / "run.toml") == 0
        out = workspace / "out"
        granger = (out / "ledger_granger.csv").read_text()
        sfs = (out / "ledger_sfs.csv").read_text()
        dates_g = [line.split(",")[0] for line in granger.splitlines()[1:]]
        dates_s = [line.split(",")[0] for line in sfs.splitlines()[1:]]
        assert dates_g == dates_s  # identical date columns
        manifest = json.loads((out / "manifest_granger.json").read_text())
        assert manifest["n_records"] == len(dates_g)

    def test_rerun_byte_identical(self, workspace):
        run_cli("ingest", "--config", workspace / "run.toml")
        run_cli("backtest", "--config", workspace / "run.toml")
        first = (workspace / "out" / "ledger_granger.csv").read_bytes()
        run_cli("backtest", "--config", workspace / "run.toml")
        second = (workspace / "out" / "ledger_granger.csv").read_bytes()
        assert first == second

    def test_selector_override_flag(self, workspace):
        run_cli("ingest", "--config", workspace / "run.toml")
        assert run_cli(
            "backtest", "--config", workspace / "run.toml",
            "--selectors", "granger",
        ) == 0
        assert not (workspace / "out" / "ledger_sfs.csv").exists()

    def test_unknown_selector_flag_exit_2(self, workspace):
        assert run_cli(
            "backtest", "--config", workspace / "run.toml", "--selectors", "zzz"
        ) == 2


class TestReport:
    def run_pipeline(self, workspace):
        run_cli("ingest", "--config", workspace / "run.toml")
        run_cli("backtest", "--config", workspace / "run.toml")

    def test_missing_ledger_exit_3(self, workspace):
        run_cli("ingest", "--config", workspace / "run.toml")
        assert run_cli("report", "--config", workspace / "run.toml") == 3

    def test_report_files_exist_and_parse(self, workspace):
        self.run_pipeline(workspace)
        assert run_cli("report", "--config", workspace / "run.toml") == 0
        out = workspace / "out"
        table1 = (out / "table1.csv").read_text().splitlines()
        assert table1[0].startswith("model,mae_normal")
        assert len(table1) == 3  # header + two selectors
        table2 = (out / "table2.csv").read_text().splitlines()
        assert len(table2) == 4  # two selectors + combined
        for name in (
            "rolling_rmse_granger.csv", "rolling_mae_sfs.csv",
            "stability_granger.csv", "combined_portfolio.csv", "metrics.json",
        ):
            assert (out / name).exists()

    def test_report_matches_direct_evaluation(self, workspace):
        from causalfs import evaluation
        from causalfs.backtest import ledger_from_csv
        from causalfs.ingest import Regime, load_calendar

        self.run_pipeline(workspace)
        run_cli("report", "--config", workspace / "run.toml")
        out = workspace / "out"
        ledger = ledger_from_csv((out / "ledger_granger.csv").read_text())
        calendar = load_calendar((workspace / "crisis.txt").read_text())
        report = evaluation.regime_metrics(ledger, calendar)
        row = (out / "table1.csv").read_text().splitlines()[1].split(",")
        assert row[0] == "granger"
        assert float(row[1]) == pytest.approx(
            report.regime(Regime.NORMAL).mae, abs=1e-9
        )

    def test_crisis_free_calendar_flags_absent(self, workspace):
        (workspace / "crisis.txt").write_text("# no crises\n")
        self.run_pipeline(workspace)
        assert run_cli("report", "--config", workspace / "run.toml") == 0
        row = (workspace / "out" / "table1.csv").read_text().splitlines()[1]
        cells = row.split(",")
        assert cells[2] == ""  # crisis MAE absent
        assert cells[5] == ""  # increase undefined


class TestValidate:
    def test_recovery_sweep(self, tmp_path):
        spec = """
d = 6
p = 1
n = 400
edge_density = 0.0
target_parents = 2
ar_coeff = 0.4
instantaneous = false
n_seeds = 5
seed = 0
selectors = ["granger"]
output_dir = "lab"

[selector.granger]
alpha = 0.05
"""
        path = tmp_path / "lab.toml"
        path.write_text(spec)
        assert run_cli("validate", "--config", path) == 0
        text = (tmp_path / "lab" / "recovery_granger.csv").read_text()
        lines = text.strip().splitlines()
        assert lines[0] == "seed,precision,recall,f1,n_selected"
        assert len(lines) == 7  # header + 5 seeds + mean
        mean_f1 = float(lines[-1].split(",")[3])
        assert mean_f1 >= 0.8

    def test_unknown_selector_exit_2(self, tmp_path):
        path = tmp_path / "lab.toml"
        path.write_text('d = 4\nselectors = ["bogus"]\n')
        assert run_cli("validate", "--config", path) == 2

    def test_density_zero_selection_rate_near_alpha(self, tmp_path):
        spec = (
            "d = 6\nn = 300\nedge_density = 0.0\nar_coeff = 0.3\n"
            'instantaneous = false\nn_seeds = 30\nselectors = ["granger"]\n'
        )
        path = tmp_path / "null.toml"
        path.write_text(spec)
        assert run_cli("validate", "--config", path) == 0
        lines = (tmp_path / "out" / "recovery_granger.csv").read_text().splitlines()
        rate = float(lines[-1].split(",")[4])
        assert rate < 0.12  # alpha 0.05 plus sampling slack
