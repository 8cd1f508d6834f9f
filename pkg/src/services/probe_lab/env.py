"""
Environments and Probe Oracles
==============================
Reward laws, oblivious loss streams and the two probe feedback contracts.

This module provides:
1. StochasticEnv - independent or jointly distributed arm rewards in [0, 1]
2. tight_instance - the correlated construction that defeats gain-based pairing
3. AdversarialStream / ConvexStream - loss sequences fixed before a run
4. best_probe / all_probe - BestProbe (identity of the best) and AllProbe (values)
5. CorruptionSchedule - which steps return a wrong comparison

Every realisation is drawn from the rng the harness hands in; nothing
here depends on what a policy did.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from probe_lab.core import (
    DimensionMismatchError,
    EnvironmentContractError,
    ParameterError,
    ProbeContractError,
    QuadraticFormLoss,
)
from probe_lab.oracle import DiscreteDistribution, JointDistribution, expect, expect_max_many
from probe_lab.parsers import read_loss_stream, write_loss_stream


# ── Constants ─────────────────────────────────────────────────────────────────

LOSS_RANGES = {
    "signed": (-1.0, 1.0),   # online linear optimisation
    "unit":   (0.0, 1.0),    # experts
}

STREAM_GENERATORS = ("constant", "alternating", "random", "file", "corrupted-only")
CONVEX_GENERATORS = ("fixed-quadratic", "random-quadratic", "linear")

TIGHT_MAX_DELTA = 1.0 / 9.0
THIRD = 1.0 / 3.0


# ===================================
# STOCHASTIC ARMS
# ===================================

class StochasticEnv:
    """
    n arms with rewards in [0, 1].

    Independent mode holds one DiscreteDistribution per arm and samples each
    arm separately; correlated mode holds a JointDistribution and draws one
    row per step.

    Usage:
        env = StochasticEnv.bernoulli([0.5, 0.45, 0.4])
        env.realize_step(1, rng)       # array([1., 0., 0.])
        env.expected_max((0, 1))       # 0.725
    """

    def __init__(self,
                 arms: Optional[Sequence[DiscreteDistribution]] = None,
                 joint: Optional[JointDistribution] = None,
                 name: str = "stochastic"):
        if (arms is None) == (joint is None):
            raise ParameterError("StochasticEnv needs exactly one of `arms` or `joint`")
        self.name = name
        self.arms: Optional[Tuple[DiscreteDistribution, ...]] = tuple(arms) if arms is not None else None
        self.joint = joint
        self._max_cache: Dict[Tuple[int, ...], float] = {}

        laws = self.arms if self.arms is not None else [joint.marginal(i) for i in range(joint.n_coords)]
        if not laws:
            raise ParameterError("StochasticEnv needs at least one arm")
        for i, law in enumerate(laws):
            if not law.in_unit_interval():
                raise EnvironmentContractError(
                    f"Arm {i} has support outside [0, 1]: {law.support.tolist()}"
                )
        self._means = np.array([expect(law) for law in laws])

    @classmethod
    def bernoulli(cls, means: Sequence[float], name: str = "bernoulli") -> "StochasticEnv":
        return cls(arms=[DiscreteDistribution.bernoulli(m) for m in means], name=name)

    @property
    def correlated(self) -> bool:
        return self.joint is not None

    @property
    def n_arms(self) -> int:
        return int(self._means.size)

    @property
    def means(self) -> np.ndarray:
        return self._means.copy()

    @property
    def best_mean(self) -> float:
        return float(self._means.max())

    def marginal(self, arm: int) -> DiscreteDistribution:
        return self.arms[arm] if self.arms is not None else self.joint.marginal(arm)

    def realize_step(self, t: int, rng: np.random.Generator) -> np.ndarray:
        """One reward per arm for step t (hidden from the policy)."""
        if t < 1:
            raise ParameterError(f"Steps are numbered from 1\n  Got: t={t}")
        if self.correlated:
            return self.joint.sample(rng)
        return np.array([arm.sample(rng) for arm in self.arms])

    def realize_all(self, horizon: int, rng: np.random.Generator) -> np.ndarray:
        """(T, n) rewards for a whole run, drawn before the policy acts."""
        if self.correlated:
            return self.joint.sample(rng, size=horizon)
        return np.column_stack([arm.sample(rng, size=horizon) for arm in self.arms])

    def expected_max(self, subset: Iterable[int]) -> float:
        """Exact E[max_{i in subset} X_i]."""
        key = tuple(sorted(set(int(i) for i in subset)))
        if key not in self._max_cache:
            source = self.joint if self.correlated else self.arms
            self._max_cache[key] = expect_max_many(source, key)
        return self._max_cache[key]


def tight_instance(n: int, delta: float) -> StochasticEnv:
    """
    Correlated instance where the gain-based partner is the wrong arm.

    Arm 0: X uniform on {1/3, 2/3}.
    Arm 1: Y = X + A, A = 1/3 with probability 3*delta.
    Arm 2: Z = X + B, B = 1/3 with probability 3*delta*(1 - sqrt(delta)),
           coupled through one uniform so B = 1/3 implies A = 1/3.
    Arms 3..n-1 are constant 0.
    """
    if int(n) != n or n < 3:
        raise ParameterError(f"Tight instance needs n >= 3 arms\n  Got: n={n!r}")
    if not 0.0 < delta <= TIGHT_MAX_DELTA:
        raise ParameterError(f"Tight instance needs delta in (0, 1/9]\n  Got: delta={delta!r}")

    both = 3.0 * delta * (1.0 - math.sqrt(delta))   # A = B = 1/3
    only_a = 3.0 * delta * math.sqrt(delta)         # A = 1/3, B = 0
    neither = 1.0 - 3.0 * delta
    dummies = [0.0] * (n - 3)

    rows, probs = [], []
    for x in (THIRD, 2.0 * THIRD):
        up = x + THIRD
        rows += [[x, up, up, *dummies], [x, up, x, *dummies], [x, x, x, *dummies]]
        probs += [0.5 * both, 0.5 * only_a, 0.5 * neither]
    return StochasticEnv(joint=JointDistribution(np.array(rows), np.array(probs)),
                         name=f"tight(n={n}, delta={delta})")


# ===================================
# PROBE FEEDBACK
# ===================================

@dataclass(frozen=True)
class ProbeFeedback:
    """
    Answer to one probe.

    mode "best": best holds the winning index, values is None.
    mode "all":  values holds one value per probed index, best is None.
    """
    mode: str
    probed: Tuple[int, ...]
    best: Optional[int] = None
    values: Optional[Tuple[float, ...]] = None
    corrupted: bool = False

    def as_record(self):
        """Compact form stored in a Trace."""
        return self.best if self.mode == "best" else self.values


def _check_subset(values: np.ndarray, subset: Sequence[int], k: Optional[int]) -> Tuple[int, ...]:
    probed = tuple(int(i) for i in subset)
    if not probed:
        raise ProbeContractError("Probe set is empty")
    if len(set(probed)) != len(probed):
        raise ProbeContractError(f"Probe set repeats an index: {probed}")
    if any(i < 0 or i >= len(values) for i in probed):
        raise ProbeContractError(f"Probe set {probed} has indices outside 0..{len(values) - 1}")
    if k is not None and len(probed) > k:
        raise ProbeContractError(f"Probe set {probed} exceeds k={k}")
    return probed


def best_probe(values: Sequence[float], subset: Sequence[int],
               direction: str = "max", k: Optional[int] = None) -> ProbeFeedback:
    """
    Index in subset with the largest (direction="max") or smallest ("min")
    realised value. Ties go to the lowest index. No values are revealed.
    """
    vals = np.asarray(values, dtype=float)
    probed = _check_subset(vals, subset, k)
    if direction == "max":
        best = min(probed, key=lambda i: (-vals[i], i))
    elif direction == "min":
        best = min(probed, key=lambda i: (vals[i], i))
    else:
        raise ParameterError(f"direction must be 'max' or 'min'\n  Got: {direction!r}")
    return ProbeFeedback(mode="best", probed=probed, best=int(best))


def all_probe(values: Sequence[float], subset: Sequence[int], k: Optional[int] = None) -> ProbeFeedback:
    vals = np.asarray(values, dtype=float)
    probed = _check_subset(vals, subset, k)
    return ProbeFeedback(mode="all", probed=probed, values=tuple(float(vals[i]) for i in probed))


@dataclass(frozen=True)
class CorruptionSchedule:
    """
    Steps (1-based) on which a two-way comparison returns the wrong answer.

    Usage:
        CorruptionSchedule.front_loaded(budget=100, horizon=1000)
        CorruptionSchedule.uniform_random(100, 1000, rng)
        CorruptionSchedule.explicit(3, [2, 5, 9])
    """
    budget: int = 0
    steps: FrozenSet[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.budget < 0:
            raise ParameterError(f"Corruption budget must be >= 0\n  Got: {self.budget}")
        if len(self.steps) > self.budget:
            raise ParameterError(
                f"Schedule corrupts {len(self.steps)} steps but the budget is {self.budget}"
            )
        if any(t < 1 for t in self.steps):
            raise ParameterError("Corrupted steps are numbered from 1")
        object.__setattr__(self, "steps", frozenset(int(t) for t in self.steps))

    @classmethod
    def none(cls) -> "CorruptionSchedule":
        return cls(0, frozenset())

    @classmethod
    def front_loaded(cls, budget: int, horizon: int) -> "CorruptionSchedule":
        return cls(budget, frozenset(range(1, min(budget, horizon) + 1)))

    @classmethod
    def uniform_random(cls, budget: int, horizon: int, rng: np.random.Generator) -> "CorruptionSchedule":
        picks = rng.choice(horizon, size=min(budget, horizon), replace=False) + 1
        return cls(budget, frozenset(int(t) for t in picks))

    @classmethod
    def explicit(cls, budget: int, steps: Iterable[int]) -> "CorruptionSchedule":
        return cls(budget, frozenset(int(t) for t in steps))

    @property
    def corrupted_count(self) -> int:
        return len(self.steps)

    def is_corrupted(self, t: int) -> bool:
        return t in self.steps


def best_probe_corrupted(feedback: ProbeFeedback, schedule: CorruptionSchedule, t: int) -> ProbeFeedback:
    """
    On a corrupted step return the other member of a two-element probe
    (the worse option, or the tie-rule loser on ties).

    Raises:
        ProbeContractError: corruption requested on a probe set whose size is not 2
    """
    if not schedule.is_corrupted(t):
        return feedback
    if len(feedback.probed) != 2 or feedback.mode != "best":
        raise ProbeContractError(
            f"Corruption is defined for two-element BestProbe answers only\n"
            f"  Got mode={feedback.mode!r}, probed={feedback.probed}"
        )
    first, second = feedback.probed
    other = second if feedback.best == first else first
    return ProbeFeedback(mode="best", probed=feedback.probed, best=other, corrupted=True)


class ProbeOracle:
    """
    Probe access to one step's realised rewards.

    All probes in a step see the same realisation; play() only accepts an
    arm that was probed this step.
    """

    def __init__(self, rewards: np.ndarray, k: int):
        self._rewards = np.asarray(rewards, dtype=float)
        self.k = k
        self.calls: List[ProbeFeedback] = []
        self._probed: set = set()
        self._probe_budget = k

    def _spend(self, subset: Sequence[int]) -> None:
        self._probe_budget -= len(subset)
        if self._probe_budget < 0:
            raise ProbeContractError(f"Policy probed more than k={self.k} arms in one step")
        self._probed.update(int(i) for i in subset)

    def best(self, subset: Sequence[int]) -> ProbeFeedback:
        answer = best_probe(self._rewards, subset, "max", self.k)
        self._spend(answer.probed)
        self.calls.append(answer)
        return answer

    def all(self, subset: Sequence[int]) -> ProbeFeedback:
        answer = all_probe(self._rewards, subset, self.k)
        self._spend(answer.probed)
        self.calls.append(answer)
        return answer

    def play(self, arm: int) -> float:
        if int(arm) not in self._probed:
            raise ProbeContractError(f"Arm {arm} was played without being probed this step")
        return float(self._rewards[int(arm)])


# ===================================
# ADVERSARIAL STREAMS
# ===================================

@dataclass(frozen=True, eq=False)
class AdversarialStream:
    """Oblivious loss sequence l^1..l^T, materialised before the run."""
    losses: np.ndarray
    name: str = "stream"
    loss_range: str = "signed"

    def __post_init__(self):
        if self.loss_range not in LOSS_RANGES:
            raise ParameterError(f"loss_range must be one of {sorted(LOSS_RANGES)}")
        losses = np.array(self.losses, dtype=float)
        if losses.ndim != 2 or losses.shape[0] == 0:
            raise DimensionMismatchError(f"Loss stream must be a non-empty (T, d) matrix, got {losses.shape}")
        low, high = LOSS_RANGES[self.loss_range]
        if not np.all(np.isfinite(losses)) or losses.min() < low or losses.max() > high:
            raise EnvironmentContractError(
                f"Stream '{self.name}' leaves the {self.loss_range} range [{low}, {high}]"
            )
        losses.setflags(write=False)
        object.__setattr__(self, "losses", losses)

    @property
    def horizon(self) -> int:
        return int(self.losses.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.losses.shape[1])

    def loss_at(self, t: int) -> np.ndarray:
        if not 1 <= t <= self.horizon:
            raise ParameterError(f"Step {t} outside 1..{self.horizon}")
        return self.losses[t - 1]


def save_stream(stream: AdversarialStream, path: Union[str, Path]) -> Path:
    return write_loss_stream(path, stream.losses)


def load_stream(path: Union[str, Path], loss_range: str = "signed") -> AdversarialStream:
    low, high = LOSS_RANGES[loss_range]
    _, losses = read_loss_stream(path, low, high)
    return AdversarialStream(losses, name=Path(path).stem, loss_range=loss_range)


def make_adversarial(name: str, dimension: int, horizon: int, seed: int = 0, *,
                     vector: Optional[Sequence[float]] = None,
                     pattern: Optional[Sequence[Sequence[float]]] = None,
                     loss_range: str = "signed",
                     path: Optional[Union[str, Path]] = None,
                     schedule: Optional[CorruptionSchedule] = None) -> AdversarialStream:
    """
    Build a named oblivious stream.

    constant:        every step equals `vector` (default (1, 0, ..., 0))
    alternating:     cycles through `pattern` (default: expert 0 free on odd
                     steps, expert 1 free on even steps, everyone else pays 1)
    random:          seeded i.i.d. uniform draws over the loss range
    file:            read from `path`
    corrupted-only:  random +-1 (or 0/1 on the unit range) losses on the
                     schedule's steps and zero elsewhere

    Raises:
        ParameterError: unknown generator or missing inputs
    """
    if loss_range not in LOSS_RANGES:
        raise ParameterError(f"loss_range must be one of {sorted(LOSS_RANGES)}\n  Got: {loss_range!r}")
    if horizon < 1 or dimension < 1:
        raise ParameterError(f"Streams need T >= 1 and d >= 1\n  Got: T={horizon}, d={dimension}")
    low, high = LOSS_RANGES[loss_range]

    if name == "constant":
        row = np.zeros(dimension) if vector is None else np.asarray(vector, dtype=float)
        if vector is None:
            row[0] = 1.0
        losses = np.tile(row, (horizon, 1))
    elif name == "alternating":
        rows = np.asarray(pattern if pattern is not None else _default_alternation(dimension, low), dtype=float)
        losses = rows[np.arange(horizon) % rows.shape[0]]
    elif name == "random":
        rng = np.random.default_rng(seed)
        losses = rng.uniform(low, high, size=(horizon, dimension))
    elif name == "file":
        if path is None:
            raise ParameterError("The 'file' generator needs a path")
        losses = load_stream(path, loss_range).losses
    elif name == "corrupted-only":
        if schedule is None:
            raise ParameterError("The 'corrupted-only' generator needs a corruption schedule")
        rng = np.random.default_rng(seed)
        losses = np.zeros((horizon, dimension))
        steps = sorted(t for t in schedule.steps if t <= horizon)
        losses[np.array(steps, dtype=np.int64) - 1] = rng.choice([low, high], size=(len(steps), dimension))
    else:
        raise ParameterError(
            f"Unknown stream generator '{name}'\nAvailable: {', '.join(STREAM_GENERATORS)}"
        )

    if losses.shape[1] != dimension:
        raise DimensionMismatchError(f"Generator '{name}' produced d={losses.shape[1]}, expected {dimension}")
    return AdversarialStream(losses, name=name, loss_range=loss_range)


def _default_alternation(dimension: int, low: float) -> np.ndarray:
    if dimension == 1:
        return np.array([[1.0], [low]])
    first = np.ones(dimension)
    second = np.ones(dimension)
    first[0] = 0.0
    second[1] = 0.0
    return np.vstack([first, second])


# ===================================
# CONVEX STREAMS
# ===================================

@dataclass(frozen=True, eq=False)
class ConvexStream:
    """Oblivious sequence of quadratic-form losses."""
    losses: Tuple[QuadraticFormLoss, ...]
    name: str = "convex"

    @property
    def horizon(self) -> int:
        return len(self.losses)

    @property
    def dimension(self) -> int:
        return self.losses[0].dimension

    def loss_at(self, t: int) -> QuadraticFormLoss:
        if not 1 <= t <= self.horizon:
            raise ParameterError(f"Step {t} outside 1..{self.horizon}")
        return self.losses[t - 1]


def make_convex_stream(name: str, dimension: int, horizon: int, seed: int = 0, *,
                       center: Optional[Sequence[float]] = None,
                       radius: float = 1.0) -> ConvexStream:
    """
    fixed-quadratic:  l(w) = ||w - v||^2 with v = center (default 0.5/sqrt(d) * ones)
    random-quadratic: a fresh v_t uniform in the box of half-width radius/2 each step
    linear:           l(w) = <g_t, w> with g_t uniform in [-1, 1]^d
    """
    if horizon < 1 or dimension < 1:
        raise ParameterError(f"Streams need T >= 1 and d >= 1\n  Got: T={horizon}, d={dimension}")
    rng = np.random.default_rng(seed)
    if name == "fixed-quadratic":
        v = np.full(dimension, 0.5 / math.sqrt(dimension)) if center is None else np.asarray(center, dtype=float)
        if v.shape != (dimension,):
            raise DimensionMismatchError(f"Center has shape {v.shape}, expected ({dimension},)")
        loss = QuadraticFormLoss.centered(v)
        losses = (loss,) * horizon
    elif name == "random-quadratic":
        centers = rng.uniform(-radius / 2.0, radius / 2.0, size=(horizon, dimension))
        losses = tuple(QuadraticFormLoss.centered(v) for v in centers)
    elif name == "linear":
        costs = rng.uniform(-1.0, 1.0, size=(horizon, dimension))
        losses = tuple(QuadraticFormLoss.linear_loss(g) for g in costs)
    else:
        raise ParameterError(
            f"Unknown convex generator '{name}'\nAvailable: {', '.join(CONVEX_GENERATORS)}"
        )
    return ConvexStream(losses, name=name)
