"""
Report Generator
================
Write replication Reports to disk.

Formats:
- CSV (regret curve: t, mean_regret, stderr)
- JSON (summary: config echo, checkpoints, bound comparisons)
- Markdown (human-readable summary)

File names carry the experiment name and seed, never a timestamp, so the
same (config, seed) always writes the same bytes.

Used by: analyzer.py
"""

import json
from pathlib import Path
from typing import Dict, Optional, Union

from probe_lab.harness import POLICY_PROBES, ExperimentConfig, Report
from probe_lab.lab_config import RESULTS_DIR

FORMATS = ("csv", "json", "md")
CURVE_COLUMNS = ["t", "mean_regret", "stderr"]


class ReportGenerator:
    """
    Write a Report in one or more formats.

    Usage:
        generator = ReportGenerator(out_dir="results")
        paths = generator.emit(report, fmt="csv")

        # Files written:
        # - results/meta_ucbv_bernoulli_seed5_curve.csv
        # - results/meta_ucbv_bernoulli_seed5_summary.json
    """

    def __init__(self, out_dir: Optional[Union[str, Path]] = None, verbose: bool = True):
        self.out_dir = Path(out_dir) if out_dir is not None else RESULTS_DIR
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.verbose = verbose

    def emit(self, report: Report, fmt: str = "csv") -> Dict[str, str]:
        """
        csv  -> curve CSV + summary JSON
        json -> summary JSON
        md   -> summary JSON + Markdown report

        Returns:
            {'summary_path': ..., 'curve_path': ..., 'markdown_path': ...} (present keys only)
        """
        if fmt not in FORMATS:
            raise ValueError(f"Unknown report format '{fmt}'\nAvailable: {', '.join(FORMATS)}")

        if self.verbose:
            print(f"\n📄 Writing report for '{report.config.name}'...")

        base = self.base_filename(report.config)
        paths = {"summary_path": str(self._generate_json(report, base))}
        if fmt == "csv":
            if not report.curve_t:
                raise ValueError(
                    "Report has no regret curve to write\n"
                    "  Set emit_curve=true in the config or use --format json"
                )
            paths["curve_path"] = str(self._generate_csv(report, base))
        elif fmt == "md":
            paths["markdown_path"] = str(self._generate_markdown(report, base))

        if self.verbose:
            for label, path in paths.items():
                print(f"   ✓ {label.replace('_path', '').title()}: {path}")
        return paths

    def base_filename(self, config: ExperimentConfig) -> str:
        return f"{self._clean_filename(config.name)}_seed{config.seed}"

    def _generate_json(self, report: Report, base_filename: str) -> Path:
        filepath = self.out_dir / f"{base_filename}_summary.json"
        payload = report.model_dump(mode="json")
        with open(filepath, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
        return filepath

    def _generate_csv(self, report: Report, base_filename: str) -> Path:
        filepath = self.out_dir / f"{base_filename}_curve.csv"
        report.curve_frame()[CURVE_COLUMNS].to_csv(filepath, index=False)
        return filepath

    def _generate_markdown(self, report: Report, base_filename: str) -> Path:
        filepath = self.out_dir / f"{base_filename}_report.md"
        with open(filepath, "w", encoding="utf-8") as f:
            f.write(self._build_markdown_content(report))
        return filepath

    def _build_markdown_content(self, report: Report) -> str:
        config = report.config
        md = f"""# ProbeLab Experiment Report

## 🧪 Experiment

**Name**: {config.name}
**Policy**: {report.policy}
**Probes per step**: {POLICY_PROBES[report.policy]}
**Environment**: {config.environment.kind}
**Horizon**: {config.horizon:,}
**Seed**: {config.seed}
**Replications**: {report.replications}

---

## 📊 Final Regret

**Mean**: {report.mean:.4f}
**Standard error**: {report.stderr:.4f}

---

## 📈 Checkpoints

| t | mean regret | stderr |
|---|---|---|
"""
        for row in report.checkpoints:
            md += f"| {row.t:,} | {row.mean_regret:.4f} | {row.stderr:.4f} |\n"

        if report.bounds:
            md += "\n---\n\n## 📐 Bound Comparison\n\n| bound | value | holds |\n|---|---|---|\n"
            for bound in report.bounds:
                status = "reference" if bound.reference else ("✓" if bound.holds else "⚠️ exceeded")
                md += f"| {bound.name} | {bound.value:,.4f} | {status} |\n"

        return md

    def _clean_filename(self, name: str) -> str:
        clean = "".join(c if c.isalnum() or c in "._-" else "_" for c in name.strip().lower())
        return clean.strip("_") or "experiment"


def emit_report(report: Report, fmt: str = "csv", out_dir: Optional[Union[str, Path]] = None,
                verbose: bool = True) -> Dict[str, str]:
    """Shortcut for ReportGenerator(out_dir).emit(report, fmt)."""
    return ReportGenerator(out_dir, verbose=verbose).emit(report, fmt)
