"""
ProbeLab: online learning and bandit experiments where the learner may probe
a few options before committing to one.

Components:
    core.py - noise samplers, running statistics, option sets, traces, regret
    oracle.py - exact discrete-distribution oracle and tail-bound checks
    env.py - stochastic arms, probe oracles, adversarial and convex streams
    policies_linear.py - LwC, imperfect-hint LwC, BtRL, FTPL, Hedge, HwC, CwC
    policies_mab.py - Meta UCB-V (k=2), explore/exploit (k=3), correlation exploitation (k=4)
    harness.py - ExperimentConfig, run_experiment, replicate, Report
    report_generator.py - CSV / JSON / Markdown report files
    verify.py - lemmas, tails and regressions suites
    analyzer.py - command line (run, replicate, verify, report)

Usage:
    from probe_lab import ExperimentConfig, replicate, emit_report
    from probe_lab.lab_config import get_preset

    config = ExperimentConfig.model_validate(get_preset("quick_lwc"))
    report = replicate(config)
    emit_report(report, fmt="csv", out_dir="results")
"""

from .core import AlgoParams, OptionSet, ProbeLabError, Trace
from .env import StochasticEnv, make_adversarial, tight_instance
from .harness import ExperimentConfig, Report, replicate, run_experiment
from .oracle import DiscreteDistribution, JointDistribution
from .report_generator import ReportGenerator, emit_report
from .verify import verify_suite

__all__ = [
    "AlgoParams",
    "OptionSet",
    "ProbeLabError",
    "Trace",
    "StochasticEnv",
    "make_adversarial",
    "tight_instance",
    "ExperimentConfig",
    "Report",
    "replicate",
    "run_experiment",
    "DiscreteDistribution",
    "JointDistribution",
    "ReportGenerator",
    "emit_report",
    "verify_suite",
]
