"""
ProbeLab - Main Analyzer
========================
Command-line entry point for experiments, verification suites and reports.

Usage:
    # One run of a preset, trace written as CSV
    python src/services/probe_lab/analyzer.py run --preset quick_lwc --out results

    # R replications from a JSON config, regret curve + summary
    python src/services/probe_lab/analyzer.py replicate --config exp.json --reps 20 --format csv

    # Verification suites
    python src/services/probe_lab/analyzer.py verify --suite lemmas
    python src/services/probe_lab/analyzer.py verify --suite regressions --scale 0.1

    # Re-emit a stored summary as Markdown
    python src/services/probe_lab/analyzer.py report --config results/quick_lwc_seed1_summary.json --format md

    # List presets
    python src/services/probe_lab/analyzer.py --list

Exit codes: 0 ok, 1 usage or config error, 2 verification failure, 3 I/O error.
"""

import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from probe_lab.core import ProbeLabError, save_trace  # noqa: E402
from probe_lab.harness import ExperimentConfig, Report, replicate, run_experiment  # noqa: E402
from probe_lab.lab_config import RESULTS_DIR, TAIL_TRIALS, get_preset, list_available_presets  # noqa: E402
from probe_lab.report_generator import FORMATS, ReportGenerator  # noqa: E402
from probe_lab.verify import SUITES, verify_suite  # noqa: E402

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_IO = 3


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="analyzer.py",
        description="ProbeLab: probe-augmented online learning and bandit experiments",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s run --preset quick_lwc
  %(prog)s replicate --preset meta_ucbv_bernoulli --reps 10 --format json
  %(prog)s verify --suite tails --seed 3
  %(prog)s report --config results/quick_lwc_seed1_summary.json --format md
  %(prog)s --list
        """,
    )
    parser.add_argument("command", nargs="?", choices=["run", "replicate", "verify", "report"],
                        help="What to do")
    parser.add_argument("--config", help="Experiment config JSON (or a summary JSON for 'report')")
    parser.add_argument("--preset", help="Named experiment preset (see --list)")
    parser.add_argument("--seed", type=int, help="Base seed (overrides the config)")
    parser.add_argument("--reps", type=int, help="Replication count (overrides the config)")
    parser.add_argument("--out", help=f"Output directory (default: {RESULTS_DIR})")
    parser.add_argument("--format", choices=FORMATS, default="csv", help="Report format")
    parser.add_argument("--suite", choices=SUITES, help="Verification suite")
    parser.add_argument("--scale", type=float, default=1.0,
                        help="Horizon / replication scale for the regressions suite")
    parser.add_argument("--trials", type=int, default=TAIL_TRIALS, help="Monte-Carlo trials for tail checks")
    parser.add_argument("--workers", type=int, help="Replication worker threads")
    parser.add_argument("--list", action="store_true", help="List experiment presets")
    return parser


def load_config(args) -> ExperimentConfig:
    """Config from --config or --preset, with --seed / --reps / --out applied."""
    if bool(args.config) == bool(args.preset):
        raise UsageError("Give exactly one of --config or --preset")
    data = get_preset(args.preset) if args.preset else None
    config = ExperimentConfig.model_validate(data) if data is not None else ExperimentConfig.from_file(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.reps is not None:
        overrides["replications"] = args.reps
    if args.out is not None:
        overrides["output_dir"] = args.out
    if overrides:
        config = ExperimentConfig.model_validate({**config.model_dump(mode="json"), **overrides})
    return config


def _out_dir(args, config: Optional[ExperimentConfig] = None) -> Path:
    if args.out:
        return Path(args.out)
    if config is not None and config.output_dir:
        return Path(config.output_dir)
    return RESULTS_DIR


def cmd_run(args) -> int:
    config = load_config(args)
    print(f"\n📦 Step 1/2: Running '{config.name}' ({config.policy.name}, T={config.horizon:,}, seed {config.seed})")
    trace = run_experiment(config, 0)
    print(f"   ✓ Final regret: {trace.final_regret:.4f}")

    print("\n📦 Step 2/2: Writing trace...")
    out_dir = _out_dir(args, config)
    base = ReportGenerator(out_dir, verbose=False).base_filename(config)
    path = save_trace(trace, out_dir / f"{base}_trace.csv")
    print(f"   ✓ Trace: {path}")
    return EXIT_OK


def cmd_replicate(args) -> int:
    config = load_config(args)
    print(f"\n📦 Step 1/2: Replicating '{config.name}'")
    report = replicate(config, workers=args.workers)

    print("\n📦 Step 2/2: Writing report...")
    ReportGenerator(_out_dir(args, config)).emit(report, args.format)
    _print_summary(report)
    return EXIT_OK


def cmd_verify(args) -> int:
    if not args.suite:
        raise UsageError("verify needs --suite")
    result = verify_suite(args.suite, seed=args.seed or 0, out_dir=_out_dir(args), trials=args.trials,
                          scale=args.scale, workers=args.workers)
    return EXIT_OK if result.passed else EXIT_VERIFY


def cmd_report(args) -> int:
    if not args.config:
        raise UsageError("report needs --config pointing at a summary JSON")
    report = Report.from_files(args.config)
    ReportGenerator(_out_dir(args)).emit(report, args.format)
    _print_summary(report)
    return EXIT_OK


def _print_summary(report: Report):
    print(f"\n{'=' * 70}")
    print("📊 REPORT SUMMARY")
    print(f"{'=' * 70}")
    print(f"\n🧪 {report.config.name}: {report.policy}, R={report.replications}, T={report.config.horizon:,}")
    print(f"   Mean final regret: {report.mean:.4f} ± {report.stderr:.4f}")
    for row in report.checkpoints:
        print(f"   t={row.t:>9,}  regret {row.mean_regret:>12.4f}  s.e. {row.stderr:.4f}")
    for bound in report.bounds:
        status = "reference" if bound.reference else ("✓ holds" if bound.holds else "⚠️  exceeded")
        print(f"   {bound.name}: {bound.value:,.3f} ({status})")
    print(f"\n{'=' * 70}")


COMMANDS = {
    "run": cmd_run,
    "replicate": cmd_replicate,
    "verify": cmd_verify,
    "report": cmd_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.list:
        list_available_presets()
        return EXIT_OK
    if not args.command:
        parser.print_help()
        return EXIT_USAGE

    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"\n❌ ERROR: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"\n❌ ERROR: I/O failure: {e}", file=sys.stderr)
        return EXIT_IO
    except KeyError as e:
        print(f"\n❌ ERROR: {e.args[0] if e.args else e}", file=sys.stderr)
        return EXIT_USAGE
    except (ProbeLabError, ValueError) as e:
        print(f"\n❌ ERROR: Invalid configuration or parameters\n   {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
