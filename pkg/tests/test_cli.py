"""Command-line interface: artifacts, verification exit codes."""
from __future__ import annotations

import json

import pytest

from faircoplan.airspace import ConfigError
from faircoplan.cli import run_cli
from faircoplan.serialize import load_scenario, save_scenario

from test_sim import corridor_config


@pytest.fixture()
def scenario_path(tmp_path):
    path = tmp_path / "toy.yaml"
    save_scenario(path, corridor_config(periods_per_day=2))
    return path


class TestSimulate:
    def test_writes_a_campaign_directory(self, scenario_path, tmp_path,
                                         capsys):
        out = tmp_path / "run"
        code = run_cli(["simulate", "--config", str(scenario_path),
                        "--out", str(out), "--mode", "tfmp"])
        assert code == 0
        assert (out / "tfmp" / "periods.jsonl").exists()
        assert (out / "summary.json").exists()
        stdout = capsys.readouterr().out
        assert "tfmp: served=" in stdout
        assert f"wrote {out}" in stdout

    def test_overrides_reach_the_stored_scenario(self, scenario_path,
                                                 tmp_path):
        out = tmp_path / "run"
        code = run_cli(["simulate", "--config", str(scenario_path),
                        "--out", str(out), "--mode", "coplan",
                        "--gamma", "0.25", "--demand", "6.0",
                        "--seed", "11", "--days", "1"])
        assert code == 0
        stored = load_scenario(out / "scenario.yaml")
        assert stored.gamma == 0.25
        assert stored.demand_per_hub_per_hour == 6.0
        assert stored.seed == 11
        assert stored.days == 1

    def test_rejects_unknown_mode(self, scenario_path, tmp_path):
        with pytest.raises(SystemExit):
            run_cli(["simulate", "--config", str(scenario_path),
                     "--out", str(tmp_path / "x"), "--mode", "freeflight"])


class TestCompare:
    def test_runs_every_mode_on_identical_demand(self, scenario_path,
                                                 tmp_path, capsys):
        out = tmp_path / "cmp"
        code = run_cli(["compare", "--config", str(scenario_path),
                        "--out", str(out)])
        assert code == 0
        for mode in ("fair-coplan", "coplan", "tfmp"):
            assert (out / mode / "periods.jsonl").exists()
        stdout = capsys.readouterr().out
        assert "fair-coplan: served=" in stdout
        assert "fairness improved on" in stdout


class TestReport:
    @pytest.fixture()
    def campaign_dir(self, scenario_path, tmp_path):
        out = tmp_path / "run"
        run_cli(["simulate", "--config", str(scenario_path),
                 "--out", str(out), "--mode", "tfmp"])
        return out

    def test_verifies_a_clean_directory(self, campaign_dir, capsys):
        assert run_cli(["report", "--out", str(campaign_dir)]) == 0
        assert "stored summary verified" in capsys.readouterr().out

    def test_flags_a_doctored_summary(self, campaign_dir, capsys):
        summary_path = campaign_dir / "summary.json"
        doctored = json.loads(summary_path.read_text())
        doctored["modes"]["tfmp"]["served"] += 1
        summary_path.write_text(json.dumps(doctored))
        assert run_cli(["report", "--out", str(campaign_dir)]) == 2
        assert "MISMATCH" in capsys.readouterr().err

    def test_recomputes_without_a_stored_summary(self, campaign_dir, capsys):
        (campaign_dir / "summary.json").unlink()
        assert run_cli(["report", "--out", str(campaign_dir)]) == 0
        stdout = capsys.readouterr().out
        assert '"modes"' in stdout

    def test_empty_directory_is_an_error(self, tmp_path):
        with pytest.raises(ConfigError, match="periods.jsonl"):
            run_cli(["report", "--out", str(tmp_path)])


class TestOracleCheck:
    def test_catalog_prefix_passes(self, capsys):
        assert run_cli(["oracle-check", "--cases", "3"]) == 0
        stdout = capsys.readouterr().out
        assert "3 instances checked, 0 failing case(s)" in stdout
        assert "PASS" in stdout and "FAIL" not in stdout

    def test_zero_cases_is_an_error(self, capsys):
        assert run_cli(["oracle-check", "--cases", "0"]) == 2
        assert "--cases" in capsys.readouterr().err

    def test_random_tail_beyond_the_catalog(self, capsys):
        # More cases than the catalog provides: the rest are generated.
        from faircoplan.selfcheck import build_catalog
        n = len(build_catalog()) + 2
        assert run_cli(["oracle-check", "--cases", str(n),
                        "--seed", "5"]) == 0
        assert f"{n} instances checked" in capsys.readouterr().out


class TestParser:
    def test_command_is_required(self):
        with pytest.raises(SystemExit):
            run_cli([])

    def test_unknown_command_rejected(self):
        with pytest.raises(SystemExit):
            run_cli(["optimize-everything"])
