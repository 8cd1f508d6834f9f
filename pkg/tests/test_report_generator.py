"""Tests for report files."""

import json

import numpy as np
import pandas as pd
import pytest

from probe_lab.harness import ExperimentConfig, Report, replicate
from probe_lab.report_generator import ReportGenerator, emit_report


@pytest.fixture
def report():
    config = ExperimentConfig.from_dict({
        "name": "Quick LwC/demo",
        "policy": {"name": "lwc"},
        "environment": {"kind": "adversarial", "dimension": 2, "generator": "random"},
        "horizon": 120,
        "seed": 5,
        "replications": 3,
        "checkpoints": [10, 100],
    })
    return replicate(config, verbose=False)


class TestReportGenerator:
    def test_csv_writes_curve_and_summary(self, report, tmp_path):
        paths = ReportGenerator(tmp_path, verbose=False).emit(report, "csv")
        assert set(paths) == {"summary_path", "curve_path"}
        with open(paths["curve_path"]) as f:
            assert f.readline().strip() == "t,mean_regret,stderr"
        frame = pd.read_csv(paths["curve_path"])
        assert len(frame) == 120
        assert frame["t"].tolist() == list(range(1, 121))

    def test_file_names_are_stable(self, report, tmp_path):
        paths = ReportGenerator(tmp_path, verbose=False).emit(report, "csv")
        assert paths["summary_path"].endswith("quick_lwc_demo_seed5_summary.json")
        first = open(paths["curve_path"], "rb").read()
        ReportGenerator(tmp_path, verbose=False).emit(report, "csv")
        assert open(paths["curve_path"], "rb").read() == first

    def test_checkpoints_agree_with_the_curve(self, report, tmp_path):
        paths = ReportGenerator(tmp_path, verbose=False).emit(report, "csv")
        frame = pd.read_csv(paths["curve_path"], float_precision="round_trip")
        summary = json.loads(open(paths["summary_path"]).read())
        assert [row["t"] for row in summary["checkpoints"]] == [10, 100, 120]
        for row in summary["checkpoints"]:
            assert frame.loc[row["t"] - 1, "mean_regret"] == pytest.approx(row["mean_regret"], abs=1e-12)
            assert frame.loc[row["t"] - 1, "stderr"] == pytest.approx(row["stderr"], abs=1e-12)

    def test_summary_reloads(self, report, tmp_path):
        paths = emit_report(report, "csv", out_dir=tmp_path, verbose=False)
        loaded = Report.from_files(paths["summary_path"])
        assert loaded.config.model_dump() == report.config.model_dump()
        assert loaded.final_regrets == report.final_regrets
        np.testing.assert_allclose(loaded.curve_mean, report.curve_mean, rtol=0, atol=1e-12)

    def test_summary_without_curve(self, report, tmp_path):
        paths = ReportGenerator(tmp_path, verbose=False).emit(report, "json")
        assert Report.from_files(paths["summary_path"]).curve_t == []

    def test_csv_needs_a_curve(self, report, tmp_path):
        report.curve_t = []
        with pytest.raises(ValueError, match="no regret curve"):
            ReportGenerator(tmp_path, verbose=False).emit(report, "csv")

    def test_markdown(self, report, tmp_path):
        paths = ReportGenerator(tmp_path, verbose=False).emit(report, "md")
        text = open(paths["markdown_path"], encoding="utf-8").read()
        assert "**Policy**: lwc" in text
        assert "**Probes per step**: 2" in text
        assert "| 100 |" in text
        assert "btrl_D_times_E_max_noise" in text

    def test_unknown_format(self, report, tmp_path):
        with pytest.raises(ValueError):
            ReportGenerator(tmp_path, verbose=False).emit(report, "xlsx")

    def test_default_directory(self, report, results_dir):
        paths = ReportGenerator(verbose=False).emit(report, "json")
        assert paths["summary_path"].startswith(str(results_dir))
