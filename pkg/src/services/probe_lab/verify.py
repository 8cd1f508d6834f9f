"""
Verification Suites
===================
Exact lemma sweeps, Monte-Carlo tail checks and scaled acceptance regressions.

Suites:
    lemmas       - reverse-prophet inequalities, gain identity, privacy ratios,
                   brute-force agreement, shipped fixtures, action-level DP of LwC
    tails        - sample mean / variance tail bounds, Chernoff sanity table
    regressions  - regret experiments (flatness, scaling, growth, determinism)

Every check yields a CheckResult. Checks marked informational (the eta = 0.45
sweep, hypothesis-violating fixtures, horizon-dependent regressions run below
ACCEPTANCE_SCALE) are reported but never fail a suite.
When a suite fails, the first failing instance is written to
<out_dir>/first_failure.json so it can be replayed. Pinned regression values
live in <out_dir>/regression_pins.json; the first run records them.

Usage:
    result = verify_suite("lemmas", seed=0)
    result.passed
"""

import json
import math
from itertools import combinations
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, Field
from scipy import stats

from probe_lab.core import (
    EXACT_SLACK,
    NoiseSampler,
    OptionSet,
    UndefinedRatioError,
    open_uniform,
    sample_laplace,
)
from probe_lab.harness import ExperimentConfig, Report, derive_rng, replicate, run_experiment
from probe_lab.lab_config import (
    COUNTEREXAMPLE_FIXTURE,
    EXPLORATORY_ETA,
    LEMMA_ETAS,
    LEMMA_FIXTURES,
    LEMMA_SWEEP_SIZE,
    MIXED_MIN_PS,
    RESULTS_DIR,
    TAIL_TRIALS,
    get_preset,
)
from probe_lab.oracle import (
    MIN_TAIL_Q,
    TAIL_BOUNDS,
    DiscreteDistribution,
    check_max_gain_identity,
    chernoff_bound,
    correlation_check_time,
    correlation_error_bound,
    dp_ratio,
    expect,
    expect_max,
    expect_max_bruteforce,
    expect_min_two_iid,
    expect_min_two_iid_bruteforce,
    expect_mixed_min,
    hedge_domination_gap,
    hedge_dp_ratio,
    meta_stats,
    random_distribution,
    random_dp_pair,
    random_instance,
    random_joint,
    tail_bound,
    tail_event_rate,
    tail_statistics,
    variance,
)
from probe_lab.parsers import format_distribution_literal, load_distribution_file
from probe_lab.policies_linear import LwcPolicy


# ── Constants ─────────────────────────────────────────────────────────────────

SUITES = ("lemmas", "tails", "regressions")

PAIR_GAP_INSTANCES = 200
PAIR_GAP_MAX_ARMS  = 5
ACTION_DP_SAMPLES  = 200_000
ACTION_DP_DIM      = 2
ACTION_DP_Z        = 4.0       # standard errors allowed on the empirical log ratio
MC_Z               = 3.0       # Monte-Carlo standard errors allowed on tail rates

TAIL_ARMS = {
    "bernoulli_0.5": DiscreteDistribution.bernoulli(0.5),
    "uniform_thirds": DiscreteDistribution.uniform([1.0 / 3.0, 2.0 / 3.0]),
}
TAIL_SAMPLE_SIZES = (200, 2000)
TAIL_QS = (MIN_TAIL_Q, 1.0, 2.0)

# (trials n, success probability p, delta, regime)
CHERNOFF_TABLE = [
    (100, 0.12, 0.5, "small"),
    (1000, 0.3, 0.2, "small"),
    (400, 0.05, 1.0, "small"),
    (60, 0.05, 2.0, "large"),
    (500, 0.01, 3.0, "large"),
]

# Acceptance thresholds
HEDGE_GROWTH_FACTOR   = 2.5
HINT_RATIO_RANGE      = (1.5, 2.7)
LOG_GROWTH_SLACK      = 0.3
TIGHT_RATIO_RANGE     = (1.4, 2.9)
FLATNESS_SE           = 3.0
PIN_SE                = 3.0

# Scale at which the horizon-dependent thresholds above were set
ACCEPTANCE_SCALE      = 1.0

REGRESSION_PINS_FILE  = "regression_pins.json"


class CheckResult(BaseModel):
    """Outcome of one check inside a suite."""
    name: str
    passed: bool
    instances: int = 0
    violations: int = 0
    informational: bool = False
    detail: str = ""
    failure: Optional[Dict[str, Any]] = None


class SuiteResult(BaseModel):
    suite: str
    seed: int
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed or c.informational for c in self.checks)

    def first_failure(self) -> Optional[CheckResult]:
        for check in self.checks:
            if not (check.passed or check.informational):
                return check
        return None

    def get_summary(self) -> Dict[str, int]:
        return {
            "checks": len(self.checks),
            "failed": sum(1 for c in self.checks if not (c.passed or c.informational)),
            "informational": sum(1 for c in self.checks if c.informational),
        }


class _Sweep:
    """Counts instances of one randomised check and keeps its first violation."""

    def __init__(self, name: str, informational: bool = False):
        self.name = name
        self.informational = informational
        self.instances = 0
        self.violations = 0
        self.failure: Optional[Dict[str, Any]] = None

    def record(self, ok: bool, instance: Callable[[], Dict[str, Any]]) -> None:
        self.instances += 1
        if not ok:
            self.violations += 1
            if self.failure is None:
                self.failure = instance()

    def result(self, detail: str = "") -> CheckResult:
        return CheckResult(name=self.name, passed=self.violations == 0, instances=self.instances,
                           violations=self.violations, informational=self.informational,
                           detail=detail, failure=self.failure)


def _literal(dist: DiscreteDistribution) -> str:
    return format_distribution_literal(dist)


# ===================================
# LEMMAS SUITE
# ===================================

def _min_two_iid_sweep(rng: np.random.Generator, eta: float, size: int,
                       informational: bool = False) -> CheckResult:
    sweep = _Sweep(f"min_two_iid_vs_private_pair(eta={eta})", informational)
    for _ in range(size):
        d1, d2 = random_dp_pair(rng, eta)
        lhs, rhs = expect_min_two_iid(d1), expect(d2)
        sweep.record(lhs <= rhs + EXACT_SLACK, lambda: {
            "eta": eta, "D1": _literal(d1), "D2": _literal(d2), "E_min": lhs, "E_C": rhs,
        })
    return sweep.result("E[min(A, B)] <= E[C] with A, B ~ D1 and C ~ D2")


def _mixed_min_sweep(rng: np.random.Generator, p: float, size: int) -> CheckResult:
    eta = 0.99 * p / 4.0
    sweep = _Sweep(f"mixed_min_vs_private_pair(p={p})")
    for _ in range(size):
        d1, d2 = random_dp_pair(rng, eta)
        lhs, rhs = expect_mixed_min(d1, p), expect(d2)
        sweep.record(lhs <= rhs + EXACT_SLACK, lambda: {
            "p": p, "eta": eta, "D1": _literal(d1), "D2": _literal(d2), "E_Z": lhs, "E_C": rhs,
        })
    return sweep.result(f"E[Z] <= E[C] with eta = {eta:.4f} < p/4")


def _expected_max_sweep(rng: np.random.Generator, size: int) -> CheckResult:
    sweep = _Sweep("expected_max_lower_bound")
    for _ in range(size):
        x, y = random_distribution(rng), random_distribution(rng)
        if expect(y) < expect(x):
            x, y = y, x
        lhs, rhs = expect_max(x, y), expect(x) + variance(x) / 2.0
        sweep.record(lhs >= rhs - EXACT_SLACK, lambda: {
            "X": _literal(x), "Y": _literal(y), "E_max": lhs, "bound": rhs,
        })
    return sweep.result("E[max(X, Y)] >= mu_X + sigma_X^2 / 2 when mu_Y >= mu_X")


def pair_gap_violations(arms: List[DiscreteDistribution]) -> List[Dict[str, Any]]:
    """Pairs with mu_ij < mu* whose gap to the best pair falls short of sigma_ij^2 / 4."""
    best_arm = max(expect(a) for a in arms)
    pairs = {(i, j): meta_stats(arms[i], arms[j])
             for i in range(len(arms)) for j in range(i + 1, len(arms))}
    best_pair = max(mean for mean, _ in pairs.values())
    violations = []
    for (i, j), (mean, var) in pairs.items():
        # pairs tied with the best arm only differ from it by rounding
        if mean >= best_arm - EXACT_SLACK:
            continue
        if best_pair - mean < var / 4.0 - EXACT_SLACK:
            violations.append({"pair": [i, j], "gap": best_pair - mean, "variance": var})
    return violations


def _pair_gap_sweep(rng: np.random.Generator, size: int) -> CheckResult:
    sweep = _Sweep("meta_arm_gap_lower_bound")
    for _ in range(size):
        arms = random_instance(rng, int(rng.integers(3, PAIR_GAP_MAX_ARMS + 1)))
        found = pair_gap_violations(arms)
        sweep.record(not found, lambda: {"arms": [_literal(a) for a in arms], **found[0]})
    return sweep.result("M* - mu_ij >= sigma_ij^2 / 4 for pairs with mu_ij < mu*")


def _gain_identity_sweep(rng: np.random.Generator, size: int) -> CheckResult:
    sweep = _Sweep("max_gain_identity")
    for _ in range(size):
        joint = random_joint(rng, int(rng.integers(2, 5)))
        for i in range(joint.n_coords):
            for j in range(joint.n_coords):
                if i == j:
                    continue
                gap = check_max_gain_identity(joint, i, j)
                sweep.record(gap <= EXACT_SLACK, lambda: {
                    "outcomes": joint.outcomes.tolist(), "probs": joint.probs.tolist(),
                    "i": i, "j": j, "gap": gap,
                })
    return sweep.result("E[max(X_i, X_j)] = mu_i + G_ji on arbitrary joints")


def _bruteforce_sweep(rng: np.random.Generator, size: int) -> CheckResult:
    sweep = _Sweep("bruteforce_agreement")
    for _ in range(size):
        x, y = random_distribution(rng), random_distribution(rng)
        gap_min = abs(expect_min_two_iid(x) - expect_min_two_iid_bruteforce(x))
        gap_max = abs(expect_max(x, y) - expect_max_bruteforce(x, y))
        sweep.record(max(gap_min, gap_max) <= EXACT_SLACK, lambda: {
            "X": _literal(x), "Y": _literal(y), "gap_min": gap_min, "gap_max": gap_max,
        })
    return sweep.result("closed forms agree with full enumeration")


def _hedge_sweep(rng: np.random.Generator, size: int) -> List[CheckResult]:
    privacy = _Sweep("hedge_update_privacy")
    domination = _Sweep("hedge_min_of_two_domination")
    for eta in LEMMA_ETAS:
        for _ in range(max(1, math.ceil(size / len(LEMMA_ETAS)))):
            n = int(rng.integers(2, 8))
            log_w = rng.normal(0.0, 2.0, n)
            loss = rng.random(n)
            ratio = hedge_dp_ratio(log_w, loss, eta)
            gap = hedge_domination_gap(log_w, loss, eta)
            instance = lambda: {"eta": eta, "log_weights": log_w.tolist(), "loss": loss.tolist(),
                                "ratio": ratio, "gap": gap}
            privacy.record(ratio <= eta + EXACT_SLACK, instance)
            domination.record(gap <= EXACT_SLACK, instance)
    return [privacy.result("one multiplicative-weights step moves log-probabilities by <= eta"),
            domination.result("E[min of two draws from p] <= E[draw from p']")]


def _counterexample_check(path: Path) -> CheckResult:
    name = "total_variation_counterexample"
    if not path.exists():
        return CheckResult(name=name, passed=False, detail=f"Fixture missing: {path}")
    first, second = load_distribution_file(path)[:2]
    d = float(first.values[0])
    eta = second.mass_at(0.0)
    e_min, e_c = expect_min_two_iid(first), expect(second)
    reproduced = abs(e_min - d) <= EXACT_SLACK and abs(e_c - d * (1.0 - eta)) <= EXACT_SLACK
    try:
        ratio = dp_ratio(first, second)
        flagged = False
        note = f"dp_ratio = {ratio:.4f} (expected undefined)"
    except UndefinedRatioError:
        flagged = True
        note = "dp_ratio undefined: pair violates the two-sided privacy hypothesis"
    failure = None if reproduced and flagged else {
        "D1": _literal(first), "D2": _literal(second), "E_min": e_min, "E_C": e_c,
    }
    return CheckResult(
        name=name, passed=reproduced and flagged, instances=1,
        violations=0 if reproduced and flagged else 1,
        informational=reproduced and flagged,
        detail=f"E[min] = {e_min:.6f}, E[C] = {e_c:.6f}; {note}",
        failure=failure,
    )


def _fixture_checks(paths: List[Path]) -> List[CheckResult]:
    results = []
    for path in paths:
        first, second = load_distribution_file(path)[:2]
        lhs, rhs = expect_min_two_iid(first), expect(second)
        try:
            ratio = dp_ratio(first, second)
        except UndefinedRatioError:
            ratio = math.inf
        if ratio > max(LEMMA_ETAS):
            results.append(CheckResult(
                name=f"fixture:{path.name}", passed=True, instances=1, informational=True,
                detail=f"hypothesis-violating (dp_ratio = {ratio:.4f}); E[min] = {lhs:.6f}, E[C] = {rhs:.6f}",
            ))
            continue
        ok = lhs <= rhs + EXACT_SLACK
        results.append(CheckResult(
            name=f"fixture:{path.name}", passed=ok, instances=1, violations=0 if ok else 1,
            detail=f"dp_ratio = {ratio:.4f}; E[min] = {lhs:.6f} <= E[C] = {rhs:.6f}",
            failure=None if ok else {"file": str(path), "E_min": lhs, "E_C": rhs},
        ))
    return results


def action_privacy_check(rng: np.random.Generator, eta: float = max(LEMMA_ETAS),
                         laplace_sampler: NoiseSampler = sample_laplace,
                         samples: int = ACTION_DP_SAMPLES) -> CheckResult:
    """
    Empirical action distributions of the LwC leader under L = 0 and L = l
    with l = (1, ..., 1) on the hypercube; every corner's log ratio must stay
    within eta plus ACTION_DP_Z standard errors.
    """
    options = OptionSet.hypercube(ACTION_DP_DIM)
    policy = LwcPolicy(options, eta, rng, laplace_sampler=laplace_sampler)
    shift = np.ones(ACTION_DP_DIM)
    weights = 1 << np.arange(ACTION_DP_DIM)

    def corner_counts(cumulative: np.ndarray) -> np.ndarray:
        noise = np.asarray(policy.sampler(policy.noise_scale, open_uniform(rng, (samples, ACTION_DP_DIM))))
        corners = (cumulative + noise < 0.0).astype(np.int64) @ weights
        return np.bincount(corners, minlength=2 ** ACTION_DP_DIM)

    before, after = corner_counts(np.zeros(ACTION_DP_DIM)), corner_counts(shift)
    worst, worst_corner = -math.inf, -1
    for corner, (c1, c2) in enumerate(zip(before, after)):
        if c1 == 0 or c2 == 0:
            continue
        excess = abs(math.log(c1 / c2)) - ACTION_DP_Z * math.sqrt(1.0 / c1 + 1.0 / c2)
        if excess > worst:
            worst, worst_corner = excess, corner
    ok = worst <= eta
    return CheckResult(
        name=f"lwc_action_privacy(eta={eta})", passed=ok, instances=2 ** ACTION_DP_DIM,
        violations=0 if ok else 1,
        detail=f"largest corrected log ratio {worst:.4f} at corner {worst_corner} (limit {eta})",
        failure=None if ok else {"eta": eta, "counts_L": before.tolist(), "counts_L_plus_l": after.tolist()},
    )


def run_lemmas(seed: int = 0, laplace_sampler: NoiseSampler = sample_laplace,
               sweep_size: int = LEMMA_SWEEP_SIZE, verbose: bool = True) -> List[CheckResult]:
    rng = derive_rng(seed, 0, "env")
    checks: List[CheckResult] = []
    for eta in LEMMA_ETAS:
        checks.append(_min_two_iid_sweep(rng, eta, sweep_size))
    checks.append(_min_two_iid_sweep(rng, EXPLORATORY_ETA, sweep_size, informational=True))
    for p in MIXED_MIN_PS:
        checks.append(_mixed_min_sweep(rng, p, sweep_size))
    checks.append(_expected_max_sweep(rng, sweep_size))
    checks.append(_pair_gap_sweep(rng, max(1, sweep_size * PAIR_GAP_INSTANCES // LEMMA_SWEEP_SIZE)))
    checks.append(_gain_identity_sweep(rng, sweep_size))
    checks.append(_bruteforce_sweep(rng, sweep_size))
    checks.extend(_hedge_sweep(rng, sweep_size))
    checks.append(_counterexample_check(COUNTEREXAMPLE_FIXTURE))
    checks.extend(_fixture_checks(LEMMA_FIXTURES))
    checks.append(action_privacy_check(derive_rng(seed, 0, "policy"), laplace_sampler=laplace_sampler))
    return checks


# ===================================
# TAILS SUITE
# ===================================

def _mc_stderr(bound: float, trials: int) -> float:
    b = min(bound, 1.0)
    return math.sqrt(b * (1.0 - b) / trials)


def run_tails(seed: int = 0, trials: int = TAIL_TRIALS, verbose: bool = True) -> List[CheckResult]:
    rng = derive_rng(seed, 0, "env")
    checks: List[CheckResult] = []
    for label, dist in TAIL_ARMS.items():
        for s in TAIL_SAMPLE_SIZES:
            means, variances = tail_statistics(dist, s, trials, rng)
            for bound_id in TAIL_BOUNDS:
                for q in (TAIL_QS if bound_id != "var-lower" else (1.0,)):
                    rate = tail_event_rate(dist, means, variances, bound_id, q)
                    bound = tail_bound(dist, s, bound_id, q)
                    limit = bound + MC_Z * _mc_stderr(bound, trials)
                    ok = rate <= limit
                    checks.append(CheckResult(
                        name=f"tail:{bound_id}:{label}:s={s}:q={q:.4g}",
                        passed=ok, instances=trials, violations=0 if ok else 1,
                        detail=f"rate {rate:.5f} vs bound {bound:.5f} (+3 s.e. = {limit:.5f})",
                        failure=None if ok else {"dist": _literal(dist), "s": s, "bound_id": bound_id,
                                                 "q": q, "rate": rate, "bound": bound, "seed": seed},
                    ))
    checks.append(_chernoff_table())
    return checks


def _chernoff_table() -> CheckResult:
    sweep = _Sweep("chernoff_table")
    for n, p, delta, regime in CHERNOFF_TABLE:
        mu = n * p
        bound = chernoff_bound(mu, delta, regime)
        upper = float(stats.binom.sf(math.ceil((1.0 + delta) * mu) - 1, n, p))
        sweep.record(upper <= bound + EXACT_SLACK, lambda: {
            "n": n, "p": p, "delta": delta, "regime": regime, "upper_tail": upper, "bound": bound,
        })
        if regime == "small":
            lower = float(stats.binom.cdf(math.floor((1.0 - delta) * mu), n, p))
            sweep.record(lower <= bound + EXACT_SLACK, lambda: {
                "n": n, "p": p, "delta": delta, "regime": regime, "lower_tail": lower, "bound": bound,
            })
    return sweep.result("exact binomial tails under the multiplicative Chernoff bounds")


# ===================================
# REGRESSIONS SUITE
# ===================================

def _scaled(preset_key: str, scale: float, scale_horizon: bool = True) -> ExperimentConfig:
    data = get_preset(preset_key)
    if scale_horizon:
        data["horizon"] = max(10, int(round(data["horizon"] * scale)))
    data["replications"] = max(2, int(round(data["replications"] * min(1.0, scale * 10))))
    data["checkpoints"] = [max(1, data["horizon"] // 10), data["horizon"]]
    data["emit_curve"] = False
    return ExperimentConfig.model_validate(data)


def at_scale(check: CheckResult, scale: float) -> CheckResult:
    """Thresholds tuned on the full-size experiments only bind at ACCEPTANCE_SCALE."""
    if scale >= ACCEPTANCE_SCALE or check.informational:
        return check
    return check.model_copy(update={
        "informational": True,
        "detail": f"{check.detail} [reported only below scale {ACCEPTANCE_SCALE:g}]",
    })


def best_pair_shift(config: ExperimentConfig) -> float:
    """M* - mu*: per-step offset between regret against the best arm and against the best pair."""
    env = config.environment.build()
    best_pair = max(env.expected_max(pair) for pair in combinations(range(env.n_arms), 2))
    return best_pair - env.best_mean


def _early_late(report: Report, shift: float = 0.0):
    early, late = (row.model_copy(update={"mean_regret": row.mean_regret + row.t * shift})
                   for row in (report.checkpoints[0], report.checkpoints[-1]))
    pooled = math.sqrt(early.stderr ** 2 + late.stderr ** 2)
    return early, late, pooled


def _flat(name: str, report: Report, shift: float = 0.0) -> CheckResult:
    early, late, pooled = _early_late(report, shift)
    ok = late.mean_regret - early.mean_regret <= FLATNESS_SE * pooled
    return CheckResult(
        name=name, passed=ok, instances=report.replications, violations=0 if ok else 1,
        detail=(f"regret(t={early.t}) = {early.mean_regret:.3f}, regret(t={late.t}) = {late.mean_regret:.3f}, "
                f"pooled s.e. = {pooled:.3f}"),
        failure=None if ok else {"config": report.config.model_dump(mode="json")},
    )


def pin_check(name: str, key: str, mean: float, stderr: float, path: Path,
              instances: int = 0) -> CheckResult:
    """
    Compare a mean against the value pinned under `key` in `path`.

    The first run records the pin and passes; later runs must stay within
    PIN_SE pooled standard errors of it.
    """
    pins = json.loads(path.read_text()) if path.exists() else {}
    if key not in pins:
        pins[key] = {"mean": mean, "stderr": stderr}
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(pins, f, indent=2, sort_keys=True)
            f.write("\n")
        return CheckResult(name=name, passed=True, instances=instances,
                           detail=f"pinned {mean:.4f} ± {stderr:.4f} as '{key}' in {path.name}")

    pinned = pins[key]
    tolerance = max(PIN_SE * math.sqrt(pinned["stderr"] ** 2 + stderr ** 2), EXACT_SLACK)
    ok = abs(mean - pinned["mean"]) <= tolerance
    return CheckResult(
        name=name, passed=ok, instances=instances, violations=0 if ok else 1,
        detail=f"{mean:.4f} vs pinned {pinned['mean']:.4f} (tolerance {tolerance:.4f})",
        failure=None if ok else {"key": key, "pinned": pinned, "measured": {"mean": mean, "stderr": stderr}},
    )


def _experts_flatness(scale: float, workers: Optional[int]) -> List[CheckResult]:
    checks = [_flat(f"experts_flatness:{key}", replicate(_scaled(key, scale), workers, verbose=False))
              for key in ("experts_hwc", "experts_lwc")]
    hedge = replicate(_scaled("experts_hedge", scale), workers, verbose=False)
    early, late, _ = _early_late(hedge)
    growth = late.mean_regret / early.mean_regret if early.mean_regret > 0 else math.inf
    ok = growth >= HEDGE_GROWTH_FACTOR
    checks.append(CheckResult(
        name="experts_growth:hedge", passed=ok, instances=hedge.replications, violations=0 if ok else 1,
        detail=f"Hedge regret grows x{growth:.2f} between t={early.t} and t={late.t}",
        failure=None if ok else {"config": hedge.config.model_dump(mode="json")},
    ))
    return [at_scale(c, scale) for c in checks]


def _imperfect_hints(scale: float, workers: Optional[int]) -> CheckResult:
    low = replicate(_scaled("imperfect_hints_b100", scale, scale_horizon=False), workers, verbose=False)
    high = replicate(_scaled("imperfect_hints_b400", scale, scale_horizon=False), workers, verbose=False)
    ratio = high.mean / low.mean if low.mean > 0 else math.inf
    lo, hi = HINT_RATIO_RANGE
    ok = lo <= ratio <= hi
    return at_scale(CheckResult(
        name="imperfect_hints_scaling", passed=ok, instances=low.replications + high.replications,
        violations=0 if ok else 1,
        detail=f"regret(B=400) / regret(B=100) = {high.mean:.3f} / {low.mean:.3f} = {ratio:.3f}",
        failure=None if ok else {"means": [low.mean, high.mean]},
    ), scale)


def _meta_ucbv(scale: float, workers: Optional[int]) -> List[CheckResult]:
    config = _scaled("meta_ucbv_bernoulli", scale)
    report = replicate(config, workers, verbose=False)
    early, late, _ = _early_late(report, best_pair_shift(config))
    bound = report.bounds[0]
    checks = [CheckResult(
        name="meta_ucbv_bound", passed=bound.holds, instances=report.replications,
        violations=0 if bound.holds else 1,
        detail=f"mean regret {report.mean:.3f} vs {bound.name} = {bound.value:.1f}",
    )]
    # regret against the best pair is nonnegative and grows like ln T
    if early.mean_regret > 0:
        limit = math.log(late.t) / math.log(max(early.t, 2)) + LOG_GROWTH_SLACK
        growth = late.mean_regret / early.mean_regret
        ok = growth <= limit
        detail = f"regret against M* grows x{growth:.3f} (limit {limit:.3f})"
    else:
        ok = late.mean_regret <= 0.0
        detail = (f"regret against M*: {early.mean_regret:.3f} at t={early.t}, "
                  f"{late.mean_regret:.3f} at t={late.t}")
    checks.append(at_scale(CheckResult(name="meta_ucbv_log_growth", passed=ok, instances=report.replications,
                                       violations=0 if ok else 1, detail=detail), scale))
    return checks


def _explore_exploit(scale: float, workers: Optional[int], pin_dir: Path) -> List[CheckResult]:
    config = _scaled("explore_exploit_bernoulli", scale)
    report = replicate(config, workers, verbose=False)
    shift = best_pair_shift(config)
    against_pair = report.mean + config.horizon * shift
    key = f"{config.name}:seed={config.seed}:scale={scale:g}"
    return [
        at_scale(_flat("explore_exploit_constant", report, shift), scale),
        pin_check("explore_exploit_pinned_regret", key, against_pair, report.stderr,
                  pin_dir / REGRESSION_PINS_FILE, report.replications),
    ]


def _tight_instance(scale: float) -> List[CheckResult]:
    means, stderrs = {}, {}
    checks: List[CheckResult] = []
    for key in ("tight_delta_0.04", "tight_delta_0.01"):
        config = _scaled(key, scale)
        env = config.environment.build()
        best = int(np.argmax(env.means))
        traces = [run_experiment(config, r) for r in range(config.replications)]
        finals = np.array([t.final_regret for t in traces])
        means[key] = float(finals.mean())
        stderrs[key] = float(finals.std(ddof=1) / math.sqrt(finals.size))

        sweep = _Sweep(f"primary_error_frequency:{key}")
        for arm in range(env.n_arms):
            gap = float(env.means[best] - env.means[arm])
            if gap <= 0.0:
                continue
            t = min(correlation_check_time(env.n_arms, gap), config.horizon)
            frequency = float(np.mean([trace.extras["primary"][t - 1] == arm for trace in traces]))
            bound = min(1.0, correlation_error_bound(t, gap, env.n_arms))
            limit = bound + MC_Z * _mc_stderr(bound, len(traces))
            sweep.record(frequency <= limit, lambda: {
                "preset": key, "arm": arm, "t": t, "frequency": frequency, "bound": bound,
            })
        checks.append(sweep.result("Pr[arm i is primary at t] <= 2 exp(-t gap^2 / 4n)"))

    ratio = means["tight_delta_0.01"] / means["tight_delta_0.04"] if means["tight_delta_0.04"] > 0 else math.inf
    lo, hi = TIGHT_RATIO_RANGE
    ok = lo <= ratio <= hi
    checks.insert(0, at_scale(CheckResult(
        name="tight_instance_scaling", passed=ok, instances=2, violations=0 if ok else 1,
        detail=(f"regret(delta=0.01) / regret(delta=0.04) = {ratio:.3f} "
                f"(means {means['tight_delta_0.01']:.3f} ± {stderrs['tight_delta_0.01']:.3f}, "
                f"{means['tight_delta_0.04']:.3f} ± {stderrs['tight_delta_0.04']:.3f})"),
        failure=None if ok else {"means": means},
    ), scale))
    return checks


def _convex_flatness(scale: float, workers: Optional[int]) -> CheckResult:
    report = replicate(_scaled("cwc_unit_ball", scale), workers, verbose=False)
    return at_scale(_flat("cwc_flatness", report), scale)


def _determinism(workers: Optional[int]) -> CheckResult:
    config = ExperimentConfig.model_validate(get_preset("quick_lwc"))
    first, second = run_experiment(config, 0), run_experiment(config, 0)
    same_trace = first.to_frame().equals(second.to_frame())
    serial = replicate(config, workers=1, verbose=False)
    parallel = replicate(config, workers=max(2, workers or 2), verbose=False)
    same_report = (serial.model_dump() == parallel.model_dump()
                   and serial.curve_mean == parallel.curve_mean)
    ok = same_trace and same_report
    return CheckResult(
        name="determinism", passed=ok, instances=2, violations=0 if ok else 1,
        detail=f"trace rerun identical: {same_trace}; serial vs parallel report identical: {same_report}",
    )


def run_regressions(seed: int = 0, scale: float = 1.0, trials: int = TAIL_TRIALS,
                    workers: Optional[int] = None, verbose: bool = True,
                    pin_dir: Optional[Path] = None) -> List[CheckResult]:
    pin_dir = RESULTS_DIR if pin_dir is None else Path(pin_dir)
    steps = [
        ("experts flatness", lambda: _experts_flatness(scale, workers)),
        ("imperfect hints", lambda: [_imperfect_hints(scale, workers)]),
        ("meta UCB-V", lambda: _meta_ucbv(scale, workers)),
        ("explore/exploit", lambda: _explore_exploit(scale, workers, pin_dir)),
        ("tail bounds", lambda: run_tails(seed, trials, verbose=False)),
        ("tight instance", lambda: _tight_instance(scale)),
        ("convex flatness", lambda: [_convex_flatness(scale, workers)]),
        ("determinism", lambda: [_determinism(workers)]),
    ]
    checks: List[CheckResult] = []
    for number, (label, step) in enumerate(steps, start=1):
        if verbose:
            print(f"\n📦 Regression {number}/{len(steps)}: {label} (scale {scale})")
        results = step()
        if verbose:
            for check in results:
                print(f"   {'✓' if check.passed or check.informational else '✗'} {check.name}: {check.detail}")
        checks.extend(results)
    return checks


# ===================================
# ENTRY POINT
# ===================================

def verify_suite(name: str, seed: int = 0, out_dir: Optional[Union[str, Path]] = None,
                 laplace_sampler: NoiseSampler = sample_laplace, trials: int = TAIL_TRIALS,
                 scale: float = 1.0, sweep_size: int = LEMMA_SWEEP_SIZE,
                 workers: Optional[int] = None, verbose: bool = True) -> SuiteResult:
    """
    Run one suite and return its SuiteResult.

    Raises:
        KeyError: unknown suite name
    """
    if name not in SUITES:
        raise KeyError(f"Suite '{name}' not found. Available suites: {', '.join(SUITES)}")

    if verbose:
        print("\n" + "=" * 70)
        print(f"🔬 VERIFYING SUITE: {name.upper()} (seed {seed})")
        print("=" * 70)

    target = Path(out_dir) if out_dir is not None else RESULTS_DIR
    if name == "lemmas":
        checks = run_lemmas(seed, laplace_sampler, sweep_size, verbose)
    elif name == "tails":
        checks = run_tails(seed, trials, verbose)
    else:
        checks = run_regressions(seed, scale, trials, workers, verbose, pin_dir=target)

    result = SuiteResult(suite=name, seed=seed, checks=checks)

    if verbose and name != "regressions":
        for check in checks:
            marker = "ℹ️ " if check.informational else ("✓" if check.passed else "✗")
            print(f"   {marker} {check.name}: {check.detail}")

    failed = result.first_failure()
    if failed is not None:
        target.mkdir(parents=True, exist_ok=True)
        path = target / "first_failure.json"
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"suite": name, "seed": seed, "check": failed.model_dump(mode="json")}, f, indent=2)
            f.write("\n")
        if verbose:
            print(f"\n❌ Suite '{name}' failed at {failed.name}")
            print(f"   First failing instance: {path}")
    elif verbose:
        summary = result.get_summary()
        print(f"\n✅ Suite '{name}' passed ({summary['checks']} checks, "
              f"{summary['informational']} informational)")
    return result
