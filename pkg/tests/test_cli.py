"""Tests for the analyzer command line."""

import json

import pytest

from probe_lab import analyzer
from probe_lab.verify import CheckResult, SuiteResult


class TestAnalyzerCli:
    def test_list_presets(self, capsys):
        assert analyzer.main(["--list"]) == analyzer.EXIT_OK
        assert "quick_lwc" in capsys.readouterr().out

    def test_missing_command(self, capsys):
        assert analyzer.main([]) == analyzer.EXIT_USAGE
        assert "usage" in capsys.readouterr().out.lower()

    def test_unknown_flag_exits_with_usage_code(self):
        with pytest.raises(SystemExit) as info:
            analyzer.main(["run", "--bogus"])
        assert info.value.code == analyzer.EXIT_USAGE

    @pytest.mark.parametrize("argv", [
        ["run"],
        ["run", "--preset", "quick_lwc", "--config", "x.json"],
        ["run", "--preset", "no_such_preset"],
        ["verify"],
        ["report"],
    ])
    def test_usage_errors(self, argv, results_dir):
        assert analyzer.main(argv) == analyzer.EXIT_USAGE

    def test_invalid_config_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"policy": {"name": "lwc"},
                                    "environment": {"kind": "stochastic", "arms": [{"bernoulli": 0.5}]},
                                    "horizon": 10}))
        assert analyzer.main(["run", "--config", str(path), "--out", str(tmp_path)]) == analyzer.EXIT_USAGE

    def test_run_writes_a_trace(self, tmp_path):
        code = analyzer.main(["run", "--preset", "quick_lwc", "--seed", "9", "--out", str(tmp_path)])
        assert code == analyzer.EXIT_OK
        trace = tmp_path / "quick_lwc_seed9_trace.csv"
        assert trace.exists()
        assert trace.read_text().splitlines()[0].startswith("t,probed,feedback,action")

    def test_replicate_then_report(self, tmp_path):
        code = analyzer.main(["replicate", "--preset", "quick_lwc", "--reps", "2", "--out", str(tmp_path)])
        assert code == analyzer.EXIT_OK
        summary = tmp_path / "quick_lwc_seed1_summary.json"
        assert (tmp_path / "quick_lwc_seed1_curve.csv").exists()
        assert json.loads(summary.read_text())["replications"] == 2

        code = analyzer.main(["report", "--config", str(summary), "--format", "md", "--out", str(tmp_path)])
        assert code == analyzer.EXIT_OK
        assert (tmp_path / "quick_lwc_seed1_report.md").exists()

    def test_verify_failure_exit_code(self, monkeypatch, results_dir):
        failing = SuiteResult(suite="lemmas", seed=0, checks=[CheckResult(name="x", passed=False)])
        monkeypatch.setattr(analyzer, "verify_suite", lambda *args, **kwargs: failing)
        assert analyzer.main(["verify", "--suite", "lemmas"]) == analyzer.EXIT_VERIFY

    def test_verify_success_exit_code(self, monkeypatch, results_dir):
        passing = SuiteResult(suite="tails", seed=0, checks=[CheckResult(name="x", passed=True)])
        monkeypatch.setattr(analyzer, "verify_suite", lambda *args, **kwargs: passing)
        assert analyzer.main(["verify", "--suite", "tails"]) == analyzer.EXIT_OK

    def test_io_error_exit_code(self, tmp_path):
        blocker = tmp_path / "not_a_dir"
        blocker.write_text("occupied")
        code = analyzer.main(["run", "--preset", "quick_lwc", "--out", str(blocker)])
        assert code == analyzer.EXIT_IO

    def test_missing_summary_is_an_io_error(self, tmp_path):
        code = analyzer.main(["report", "--config", str(tmp_path / "missing_summary.json")])
        assert code == analyzer.EXIT_IO
