"""
Experiment Harness
==================
Turns an ExperimentConfig into Traces and aggregated Reports.

Flow:
1. ExperimentConfig (pydantic) validates the policy, environment and horizon
2. derive_rng() gives every (replication, stream) its own PCG64 generator
3. run_experiment() plays one replication and returns a Trace
4. replicate() runs R replications on a thread pool and folds the regret
   curves in replication order into a Report

Config files are JSON; every Report embeds the config it came from.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from probe_lab.core import (
    AlgoParams,
    EnvironmentContractError,
    IncompatibleConfigError,
    OptionSet,
    ProbeContractError,
    QuadraticFormLoss,
    Trace,
    laplace_max_abs_mean,
    running_pseudo_regret,
    running_regret_linear,
)
from probe_lab.env import (
    AdversarialStream,
    CorruptionSchedule,
    ProbeOracle,
    StochasticEnv,
    best_probe,
    best_probe_corrupted,
    make_adversarial,
    make_convex_stream,
    tight_instance,
)
from probe_lab.lab_config import DEFAULT_CHECKPOINTS, DEFAULT_WORKERS
from probe_lab.oracle import DiscreteDistribution
from probe_lab.policies_linear import (
    BtrlPolicy,
    ConvexProblem,
    CwcPolicy,
    FtplPolicy,
    HedgePolicy,
    HwcPolicy,
    LwcImperfectPolicy,
    LwcPolicy,
)
from probe_lab.policies_mab import BANDIT_POLICIES, CorrelationPolicy, ExploreExploitPolicy


# ── Constants ─────────────────────────────────────────────────────────────────

PolicyName = Literal[
    "lwc", "btrl", "lwc_imperfect", "ftpl",
    "hwc", "hedge",
    "cwc",
    "meta_ucbv", "explore_exploit", "correlation", "ucb1_top_two",
]

LINEAR_POLICIES = ("lwc", "btrl", "lwc_imperfect", "ftpl")
EXPERT_POLICIES = ("hwc", "hedge")
CONVEX_POLICIES = ("cwc",)
BANDIT_NAMES = tuple(BANDIT_POLICIES)

# Probes per step each policy uses (0: the baselines never probe)
POLICY_PROBES = {
    "lwc": 2, "btrl": 0, "lwc_imperfect": 2, "ftpl": 0, "hwc": 2, "hedge": 0, "cwc": 2,
    "meta_ucbv": 2, "explore_exploit": 3, "correlation": 4, "ucb1_top_two": 2,
}

STREAM_IDS = {"env": 0, "policy": 1, "coin": 2, "corruption": 3, "stream": 4}

META_UCBV_PAIR_CONSTANT = 50.0   # per-pair regret <= 10 (4 + 1) ln T


# ===================================
# CONFIG MODELS
# ===================================

class PolicySpec(BaseModel):
    """Policy name, its AlgoParams and the two variant switches."""
    model_config = ConfigDict(extra="forbid")

    name: PolicyName
    params: AlgoParams = Field(default_factory=AlgoParams)
    sampler: Literal["hedge", "gumbel"] = "hedge"
    rank: Literal["ucb", "mean"] = "ucb"


class ArmSpec(BaseModel):
    """One arm: either {"bernoulli": p} or {"values": [...], "probs": [...]}."""
    model_config = ConfigDict(extra="forbid")

    bernoulli: Optional[float] = Field(None, ge=0.0, le=1.0)
    values: Optional[List[float]] = None
    probs: Optional[List[float]] = None

    @model_validator(mode="after")
    def one_form(self):
        table = self.values is not None and self.probs is not None
        partial = (self.values is None) != (self.probs is None)
        if partial or (self.bernoulli is None) == (not table):
            raise ValueError("Give an arm as either 'bernoulli' or both 'values' and 'probs'")
        return self

    def to_distribution(self) -> DiscreteDistribution:
        if self.bernoulli is not None:
            return DiscreteDistribution.bernoulli(self.bernoulli)
        return DiscreteDistribution.from_pairs(self.values, self.probs)


class TightInstanceSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=3)
    delta: float = Field(gt=0.0, le=1.0 / 9.0)


class StochasticSpec(BaseModel):
    """Independent arms or the correlated tight instance."""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["stochastic"] = "stochastic"
    arms: Optional[List[ArmSpec]] = None
    tight: Optional[TightInstanceSpec] = None

    @model_validator(mode="after")
    def one_source(self):
        if (self.arms is None) == (self.tight is None):
            raise ValueError("A stochastic environment needs exactly one of 'arms' or 'tight'")
        if self.arms is not None and not self.arms:
            raise ValueError("A stochastic environment needs at least one arm")
        return self

    @property
    def n_arms(self) -> int:
        return len(self.arms) if self.arms is not None else self.tight.n

    def build(self) -> StochasticEnv:
        if self.tight is not None:
            return tight_instance(self.tight.n, self.tight.delta)
        return StochasticEnv(arms=[arm.to_distribution() for arm in self.arms])


class CorruptionSpec(BaseModel):
    """How many hints are wrong (budget) and where they fall."""
    model_config = ConfigDict(extra="forbid")

    budget: int = Field(ge=0)
    placement: Literal["front", "random", "explicit"] = "front"
    steps: Optional[List[int]] = None

    @model_validator(mode="after")
    def explicit_needs_steps(self):
        if self.placement == "explicit" and self.steps is None:
            raise ValueError("Explicit corruption placement needs 'steps'")
        return self

    def build(self, horizon: int, rng: np.random.Generator) -> CorruptionSchedule:
        if self.placement == "front":
            return CorruptionSchedule.front_loaded(self.budget, horizon)
        if self.placement == "random":
            return CorruptionSchedule.uniform_random(self.budget, horizon, rng)
        return CorruptionSchedule.explicit(self.budget, self.steps)


class StreamSpec(BaseModel):
    """Oblivious adversarial stream over an option set."""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["adversarial"] = "adversarial"
    options: Literal["hypercube", "simplex", "explicit"] = "hypercube"
    dimension: int = Field(ge=1)
    points: Optional[List[List[float]]] = None
    generator: Literal["constant", "alternating", "random", "file", "corrupted-only"] = "random"
    loss_range: Literal["signed", "unit"] = "signed"
    vector: Optional[List[float]] = None
    pattern: Optional[List[List[float]]] = None
    path: Optional[str] = None
    corruption: Optional[CorruptionSpec] = None

    @model_validator(mode="after")
    def generator_inputs(self):
        if self.options == "explicit" and not self.points:
            raise ValueError("Explicit option sets need 'points'")
        if self.generator == "file" and not self.path:
            raise ValueError("The 'file' generator needs 'path'")
        if self.generator == "corrupted-only" and self.corruption is None:
            raise ValueError("The 'corrupted-only' generator needs 'corruption'")
        return self

    def option_set(self) -> OptionSet:
        if self.options == "explicit":
            return OptionSet.explicit(self.points)
        return OptionSet(self.options, self.dimension)

    def build(self, horizon: int, seed: int, schedule: CorruptionSchedule) -> AdversarialStream:
        stream = make_adversarial(self.generator, self.dimension, horizon, seed,
                                  vector=self.vector, pattern=self.pattern,
                                  loss_range=self.loss_range, path=self.path, schedule=schedule)
        if stream.horizon < horizon:
            raise EnvironmentContractError(
                f"Stream '{self.generator}' has {stream.horizon} steps, the run needs {horizon}"
            )
        if stream.horizon > horizon:
            stream = AdversarialStream(stream.losses[:horizon], stream.name, stream.loss_range)
        return stream


class ConvexSpec(BaseModel):
    """Convex domain plus a quadratic-form loss generator."""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["convex"] = "convex"
    domain: Literal["ball", "box", "explicit"] = "ball"
    dimension: int = Field(ge=1)
    radius: float = Field(1.0, gt=0.0)
    points: Optional[List[List[float]]] = None
    generator: Literal["fixed-quadratic", "random-quadratic", "linear"] = "fixed-quadratic"
    center: Optional[List[float]] = None

    def problem(self, params: AlgoParams) -> ConvexProblem:
        return ConvexProblem(self.domain, self.dimension, radius=self.radius,
                             points=self.points, beta=params.beta, gamma=params.gamma)


EnvironmentSpec = Annotated[
    Union[StochasticSpec, StreamSpec, ConvexSpec],
    Field(discriminator="kind"),
]


class ExperimentConfig(BaseModel):
    """
    One experiment: a policy, an environment, a horizon, a base seed and a
    replication count.

    Example (JSON):
        {
          "name": "meta_ucbv_demo",
          "policy": {"name": "meta_ucbv"},
          "environment": {"kind": "stochastic", "arms": [{"bernoulli": 0.5}, {"bernoulli": 0.3}]},
          "horizon": 10000, "seed": 7, "replications": 20
        }
    """
    model_config = ConfigDict(extra="forbid")

    name: str = "experiment"
    policy: PolicySpec
    environment: EnvironmentSpec
    horizon: int = Field(ge=1)
    seed: int = Field(0, ge=0)
    replications: int = Field(1, ge=1)
    output_dir: Optional[str] = None
    emit_curve: bool = True
    checkpoints: Optional[List[int]] = None

    @model_validator(mode="after")
    def policy_fits_environment(self):
        problem = self.compatibility_problem()
        if problem:
            raise IncompatibleConfigError(problem)
        return self

    def compatibility_problem(self) -> Optional[str]:
        name, env = self.policy.name, self.environment
        if name in BANDIT_NAMES and env.kind != "stochastic":
            return f"Policy '{name}' requires a stochastic environment, got '{env.kind}'"
        if name in CONVEX_POLICIES and env.kind != "convex":
            return f"Policy '{name}' requires a convex environment, got '{env.kind}'"
        if name in LINEAR_POLICIES + EXPERT_POLICIES and env.kind != "adversarial":
            return f"Policy '{name}' requires a full-information adversarial stream, got '{env.kind}'"
        if name in EXPERT_POLICIES and (env.options != "simplex" or env.loss_range != "unit"):
            return f"Policy '{name}' runs on experts: simplex options with unit-range losses"
        if name == "correlation" and env.n_arms < 2:
            return "Policy 'correlation' needs at least two arms"
        if self.policy.params.k is not None and self.policy.params.k != POLICY_PROBES[name]:
            return f"Policy '{name}' uses k={POLICY_PROBES[name]} probes, config says k={self.policy.params.k}"
        return None

    def check_compatibility(self) -> None:
        problem = self.compatibility_problem()
        if problem:
            raise IncompatibleConfigError(problem)

    def checkpoint_steps(self) -> List[int]:
        """Sorted checkpoints inside 1..T, always ending at T."""
        base = self.checkpoints if self.checkpoints is not None else DEFAULT_CHECKPOINTS
        return sorted({t for t in base if 1 <= t <= self.horizon} | {self.horizon})

    def effective_budget(self) -> int:
        """Corruption budget B used by the imperfect-hint policy."""
        params = self.policy.params
        if params.budget is not None:
            return params.budget
        corruption = getattr(self.environment, "corruption", None)
        return corruption.budget if corruption is not None else 0

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        return cls.model_validate_json(Path(path).read_text())

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        return cls.model_validate(data)


# ===================================
# SEEDS
# ===================================

def derive_rng(base_seed: int, replication: int, stream: str) -> np.random.Generator:
    """Independent generator for (base seed, replication, stream name)."""
    if stream not in STREAM_IDS:
        raise KeyError(f"Unknown rng stream '{stream}'. Available streams: {', '.join(STREAM_IDS)}")
    sequence = np.random.SeedSequence(entropy=base_seed, spawn_key=(replication, STREAM_IDS[stream]))
    return np.random.Generator(np.random.PCG64(sequence))


def derive_seed(base_seed: int, replication: int, stream: str) -> int:
    return int(derive_rng(base_seed, replication, stream).integers(2 ** 63))


# ===================================
# SINGLE RUNS
# ===================================

class _ComparisonProbe:
    """BestProbe over two candidates for one step, with optional corruption."""

    def __init__(self, schedule: CorruptionSchedule):
        self.schedule = schedule
        self.t = 0
        self.value_of = None
        self.answer = None

    def reset(self, t: int, value_of) -> None:
        self.t, self.value_of, self.answer = t, value_of, None

    def __call__(self, candidates) -> int:
        values = [self.value_of(c) for c in candidates]
        answer = best_probe(values, (0, 1), direction="min")
        answer = best_probe_corrupted(answer, self.schedule, self.t)
        self.answer = answer
        return answer.best


def _as_index(action) -> int:
    return int(action) if np.ndim(action) == 0 else int(np.argmax(action))


def _run_bandit(config: ExperimentConfig, replication: int) -> Trace:
    spec: StochasticSpec = config.environment
    env = spec.build()
    horizon = config.horizon
    rewards = env.realize_all(horizon, derive_rng(config.seed, replication, "env"))

    name = config.policy.name
    if name == "explore_exploit":
        policy = ExploreExploitPolicy(env.n_arms, config.policy.params.epsilon, config.policy.rank)
    else:
        policy = BANDIT_POLICIES[name](env.n_arms)

    probed, feedback = [], []
    actions = np.empty(horizon, dtype=np.int64)
    realized = np.empty(horizon)
    expected = np.empty(horizon)
    for t in range(1, horizon + 1):
        row = rewards[t - 1]
        step = policy.step(t, ProbeOracle(row, policy.k))
        if step.reward != max(row[i] for i in step.exploit):
            raise ProbeContractError(
                f"Step {t}: credited reward {step.reward} is not the max over exploit set {step.exploit}"
            )
        probed.append(step.probed)
        feedback.append(step.feedback.as_record())
        actions[t - 1] = step.played
        realized[t - 1] = step.reward
        expected[t - 1] = env.expected_max(step.exploit)

    extras = {}
    if isinstance(policy, CorrelationPolicy):
        extras["primary"] = np.array(policy.primary_history, dtype=np.int64)
    regret = running_pseudo_regret(expected, env.best_mean)
    summary = {
        "final_regret": float(regret[-1]),
        "best_mean": env.best_mean,
        "realized_reward": math.fsum(realized),
    }
    return Trace(name, horizon, env.n_arms, probed, feedback, actions,
                 realized, expected, regret, extras, summary)


def _make_online_policy(config: ExperimentConfig, options: OptionSet, stream: AdversarialStream,
                        replication: int):
    spec = config.policy
    params = spec.params
    rng = derive_rng(config.seed, replication, "policy")
    if spec.name == "lwc":
        return LwcPolicy(options, params.eta, rng)
    if spec.name == "lwc_imperfect":
        coin = derive_rng(config.seed, replication, "coin")
        return LwcImperfectPolicy(options, config.effective_budget(), rng, coin)
    if spec.name == "btrl":
        return BtrlPolicy(options, params.eta, rng, stream=stream)
    if spec.name == "ftpl":
        return FtplPolicy(options, params.eta, rng)
    if spec.name == "hwc":
        return HwcPolicy(options.dimension, params.eta, rng, sampler=spec.sampler)
    return HedgePolicy(options.dimension, params.eta, rng)


def _run_online(config: ExperimentConfig, replication: int) -> Trace:
    spec: StreamSpec = config.environment
    horizon = config.horizon
    options = spec.option_set()
    if spec.corruption is not None:
        schedule = spec.corruption.build(horizon, derive_rng(config.seed, replication, "corruption"))
    else:
        schedule = CorruptionSchedule.none()
    stream = spec.build(horizon, derive_seed(config.seed, replication, "stream"), schedule)
    policy = _make_online_policy(config, options, stream, replication)
    probe = _ComparisonProbe(schedule)
    by_index = options.kind == "simplex"

    probed, feedback = [], []
    actions = np.empty(horizon, dtype=np.int64) if by_index else np.empty((horizon, options.dimension))
    realized = np.empty(horizon)
    followed = np.zeros(horizon, dtype=np.int64)
    corrupted = np.zeros(horizon, dtype=np.int64)
    for t in range(1, horizon + 1):
        loss = stream.loss_at(t)
        value_of = (lambda c, loss=loss: float(loss[c]) if np.ndim(c) == 0 else float(loss @ c))
        probe.reset(t, value_of)
        action = policy.act(t, probe)
        realized[t - 1] = value_of(action)
        policy.observe(loss)

        candidates = getattr(policy, "last_candidates", None) or ()
        if by_index:
            probed.append(tuple(_as_index(c) for c in candidates))
            actions[t - 1] = _as_index(action)
        else:
            probed.append(tuple(tuple(float(x) for x in c) for c in candidates))
            actions[t - 1] = action
        feedback.append(probe.answer.best if probe.answer is not None else None)
        corrupted[t - 1] = int(probe.answer is not None and probe.answer.corrupted)
        followed[t - 1] = int(getattr(policy, "followed_hint", False))

    regret = running_regret_linear(actions, options, stream.losses)
    summary: Dict[str, Any] = {"final_regret": float(regret[-1]), "stream": stream.name}
    extras = {}
    if isinstance(policy, LwcImperfectPolicy):
        extras = {"followed_hint": followed, "corrupted": corrupted}
        summary.update({
            "eta": policy.state.eta,
            "p": policy.p,
            "hints": policy.hints,
            "mispredictions": policy.mispredictions,
            "hint_accuracy": policy.hint_accuracy,
            "corrupted_steps": schedule.corrupted_count,
        })
    return Trace(config.policy.name, horizon, options.dimension, probed, feedback, actions,
                 realized, realized.copy(), regret, extras, summary)


def _run_convex(config: ExperimentConfig, replication: int) -> Trace:
    spec: ConvexSpec = config.environment
    params = config.policy.params
    horizon = config.horizon
    problem = spec.problem(params)
    stream = make_convex_stream(spec.generator, spec.dimension, horizon,
                                derive_seed(config.seed, replication, "stream"),
                                center=spec.center, radius=spec.radius)
    policy = CwcPolicy(problem, params.eta, derive_rng(config.seed, replication, "policy"))
    probe = _ComparisonProbe(CorruptionSchedule.none())

    cumulative = QuadraticFormLoss.zero(spec.dimension)
    probed, feedback = [], []
    actions = np.empty((horizon, spec.dimension))
    realized = np.empty(horizon)
    benchmark = np.empty(horizon)
    for t in range(1, horizon + 1):
        loss = stream.loss_at(t)
        probe.reset(t, loss.value)
        action = policy.act(t, probe)
        realized[t - 1] = loss.value(action)
        policy.observe(loss)
        cumulative = cumulative + loss
        benchmark[t - 1] = cumulative.value(problem.minimize(cumulative))
        probed.append(tuple(tuple(float(x) for x in c) for c in policy.last_candidates))
        feedback.append(probe.answer.best if probe.answer is not None else None)
        actions[t - 1] = action

    regret = np.cumsum(realized) - benchmark
    summary = {"final_regret": float(regret[-1]), "stream": stream.name}
    return Trace("cwc", horizon, spec.dimension, probed, feedback, actions,
                 realized, realized.copy(), regret, {}, summary)


def run_experiment(config: ExperimentConfig, replication: int = 0) -> Trace:
    """
    One full T-step run, deterministic in (config, seed, replication).

    Raises:
        IncompatibleConfigError: policy cannot run on the environment
        ProbeContractError: a policy broke the probe/play contract
    """
    config.check_compatibility()
    if config.policy.name in BANDIT_NAMES:
        return _run_bandit(config, replication)
    if config.policy.name in CONVEX_POLICIES:
        return _run_convex(config, replication)
    return _run_online(config, replication)


# ===================================
# AGGREGATION
# ===================================

class CurveAccumulator:
    """Pointwise running mean / variance of regret curves (Welford, Chan merge)."""

    def __init__(self, length: int):
        self.count = 0
        self.mean = np.zeros(length)
        self.sq_dev = np.zeros(length)

    def add(self, curve: np.ndarray) -> None:
        self.count += 1
        delta = curve - self.mean
        self.mean = self.mean + delta / self.count
        self.sq_dev = self.sq_dev + delta * (curve - self.mean)

    def merge(self, other: "CurveAccumulator") -> "CurveAccumulator":
        merged = CurveAccumulator(self.mean.size)
        merged.count = self.count + other.count
        if merged.count == 0:
            return merged
        delta = other.mean - self.mean
        merged.mean = self.mean + delta * other.count / merged.count
        merged.sq_dev = self.sq_dev + other.sq_dev + delta ** 2 * self.count * other.count / merged.count
        return merged

    def stderr(self) -> np.ndarray:
        if self.count < 2:
            return np.zeros_like(self.mean)
        return np.sqrt(self.sq_dev / (self.count - 1) / self.count)


class CheckpointRow(BaseModel):
    t: int
    mean_regret: float
    stderr: float


class BoundLine(BaseModel):
    """A theoretical bound next to the measured mean final regret."""
    name: str
    value: float
    holds: bool
    reference: bool = False


class Report(BaseModel):
    """Aggregated result of replicate()."""
    config: ExperimentConfig
    policy: str
    replications: int
    final_regrets: List[float]
    mean: float
    stderr: float
    checkpoints: List[CheckpointRow]
    bounds: List[BoundLine]
    summaries: List[Dict[str, Any]] = Field(default_factory=list)
    curve_t: List[int] = Field(default_factory=list, exclude=True)
    curve_mean: List[float] = Field(default_factory=list, exclude=True)
    curve_stderr: List[float] = Field(default_factory=list, exclude=True)

    def curve_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.curve_t,
            "mean_regret": self.curve_mean,
            "stderr": self.curve_stderr,
        })

    def checkpoint(self, t: int) -> CheckpointRow:
        for row in self.checkpoints:
            if row.t == t:
                return row
        raise KeyError(f"No checkpoint at t={t}. Available: {[r.t for r in self.checkpoints]}")

    @classmethod
    def from_files(cls, summary_path: Union[str, Path]) -> "Report":
        """Load a summary JSON and, when present, the curve CSV written next to it."""
        path = Path(summary_path)
        report = cls.model_validate(json.loads(path.read_text()))
        curve_path = path.with_name(path.name.replace("_summary.json", "_curve.csv"))
        if curve_path != path and curve_path.exists():
            frame = pd.read_csv(curve_path, float_precision="round_trip")
            report.curve_t = frame["t"].astype(int).tolist()
            report.curve_mean = frame["mean_regret"].tolist()
            report.curve_stderr = frame["stderr"].tolist()
        return report


def compute_bounds(config: ExperimentConfig, mean_final: float) -> List[BoundLine]:
    """Bound lines for the policy family (reference lines carry no claim)."""
    name, env, params = config.policy.name, config.environment, config.policy.params
    horizon = config.horizon
    lines: List[BoundLine] = []

    def add(label: str, value: float, reference: bool = False):
        lines.append(BoundLine(name=label, value=float(value), holds=bool(mean_final <= value),
                               reference=reference))

    if name == "meta_ucbv":
        add("meta_ucbv_50n2lnT", META_UCBV_PAIR_CONSTANT * env.n_arms ** 2 * math.log(max(horizon, 2)))
    elif name == "ucb1_top_two":
        add("ucb1_log_reference", 8.0 * env.n_arms * math.log(max(horizon, 2)), reference=True)
    elif name in LINEAR_POLICIES:
        options = env.option_set()
        d = options.dimension
        eta = 1.0 / (5.0 * math.sqrt(config.effective_budget() + 1)) if name == "lwc_imperfect" else params.eta
        add("btrl_D_times_E_max_noise", options.diameter_l1() * laplace_max_abs_mean(d, d / eta))
    elif name in EXPERT_POLICIES:
        add("hedge_log_n_over_eta", (1.0 + math.log(env.dimension)) / params.eta, reference=True)
    elif name in CONVEX_POLICIES:
        d = env.dimension
        add("cwc_gamma_d_plus_beta_d32", params.gamma * d + params.beta * d ** 1.5, reference=True)
    return lines


def replicate(config: ExperimentConfig, workers: Optional[int] = None, verbose: bool = True) -> Report:
    """
    R independent runs with derived seeds, aggregated into a Report.

    Results are consumed in replication order, so any worker count gives
    the same Report.
    """
    config.check_compatibility()
    workers = workers or DEFAULT_WORKERS
    reps = config.replications
    if verbose:
        print(f"\n🧮 Replicating '{config.name}': {reps} run(s) × T={config.horizon:,} "
              f"({config.policy.name}, {workers} worker(s))")

    accumulator = CurveAccumulator(config.horizon)
    finals: List[float] = []
    summaries: List[Dict[str, Any]] = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for rep, trace in enumerate(pool.map(lambda r: run_experiment(config, r), range(reps))):
            accumulator.add(trace.regret)
            finals.append(trace.final_regret)
            summaries.append(trace.summary)
            if verbose and (rep + 1) % max(1, reps // 5) == 0:
                print(f"   ✓ {rep + 1}/{reps} replications done")

    mean_curve, stderr_curve = accumulator.mean, accumulator.stderr()
    finals_arr = np.array(finals)
    stderr = float(finals_arr.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    mean = float(finals_arr.mean())
    checkpoints = [CheckpointRow(t=t, mean_regret=float(mean_curve[t - 1]), stderr=float(stderr_curve[t - 1]))
                   for t in config.checkpoint_steps()]

    report = Report(
        config=config,
        policy=config.policy.name,
        replications=reps,
        final_regrets=finals,
        mean=mean,
        stderr=stderr,
        checkpoints=checkpoints,
        bounds=compute_bounds(config, mean),
        summaries=summaries,
    )
    if config.emit_curve:
        report.curve_t = list(range(1, config.horizon + 1))
        report.curve_mean = mean_curve.tolist()
        report.curve_stderr = stderr_curve.tolist()

    if verbose:
        print(f"✅ Mean final regret: {mean:.4f} ± {stderr:.4f} (s.e., R={reps})")
    return report
