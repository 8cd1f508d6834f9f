"""
Core Types and Samplers
=======================
Domain types, noise samplers, running statistics and regret accounting
shared by every policy in ProbeLab.

This module:
1. Declares the error hierarchy used across the package
2. Samples Laplace, Gumbel and Gamma-vector noise by inverse CDF
3. Keeps numerically stable running means and variances (Welford)
4. Minimizes linear costs over hypercube, simplex and explicit option sets
5. Accounts regret (online learning) and pseudo-regret (bandits) from a Trace

Pure numerics - nothing in here prints.
"""

import ast
import math
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator


# ── Constants ─────────────────────────────────────────────────────────────────

MAX_ETA          = 0.4     # largest privacy/learning rate the choice policies accept
DEFAULT_EPSILON  = 0.1     # optimistic-variance weight for the k=3 policy
EXACT_SLACK      = 1e-12   # float slack for every "exact" comparison
OBSERVATION_SLACK = 1e-12  # rewards like 2/3 + 1/3 may land a ulp outside [0, 1]

# Smallest uniform the open-interval helper hands out (2**-53 keeps 1 - 2|u - 0.5| > 0)
_OPEN_UNIFORM_FLOOR = 2.0 ** -53

OPTION_KINDS = ("explicit", "hypercube", "simplex")

ArrayLike = Union[float, Sequence[float], np.ndarray]


# ===================================
# ERRORS
# ===================================

class ProbeLabError(ValueError):
    """Base class for every error raised by ProbeLab."""


class ParameterError(ProbeLabError):
    """A numeric parameter is outside its allowed range."""


class EnvironmentContractError(ProbeLabError):
    """An environment produced (or was given) a value it promised not to."""


class DimensionMismatchError(ProbeLabError):
    """Vectors, traces or option sets disagree on their shape."""


class ProbeContractError(ProbeLabError):
    """A probe oracle or a policy broke the probe/play contract."""


class SolverError(ProbeLabError):
    """The inner convex solver did not reach its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class UndefinedRatioError(ProbeLabError):
    """Probability ratio is undefined (support mismatch or zero mass)."""


class IncompatibleConfigError(ProbeLabError):
    """The chosen policy cannot run on the chosen environment."""


# ===================================
# NOISE SAMPLERS
# ===================================

def _check_positive(name: str, value: float) -> float:
    if not np.isfinite(value) or value <= 0:
        raise ParameterError(
            f"{name} must be a positive finite number\n"
            f"  Got: {name}={value!r}"
        )
    return float(value)


def _check_uniform(u: ArrayLike) -> np.ndarray:
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ParameterError(
            "Uniform draw must lie strictly inside (0, 1)\n"
            f"  Got: {u!r}"
        )
    return arr


def _same_shape(result: np.ndarray, u: ArrayLike):
    return float(result) if np.ndim(u) == 0 else result


def open_uniform(rng: np.random.Generator, size=None):
    """Uniform draws on the open interval (0, 1)."""
    u = rng.random(size)
    return np.where(u > 0.0, u, _OPEN_UNIFORM_FLOOR) if size is not None else (u if u > 0.0 else _OPEN_UNIFORM_FLOOR)


def sample_laplace(scale: float, u: ArrayLike):
    """
    Laplace(scale) by inverse CDF.

    x = -b * sign(u - 0.5) * ln(1 - 2|u - 0.5|)

    Args:
        scale: Laplace scale b > 0
        u: uniform draw(s) in (0, 1); scalars give a float, arrays an array

    Returns:
        Sample(s) with the same shape as u
    """
    b = _check_positive("scale", scale)
    centered = _check_uniform(u) - 0.5
    x = -b * np.sign(centered) * np.log1p(-2.0 * np.abs(centered))
    return _same_shape(x, u)


def sample_gumbel(eta: float, u: ArrayLike):
    """
    Gumbel with location 0 and scale 1/eta by inverse CDF.

    z = -(1/eta) * ln(-ln u), so that Pr[Z <= z] = exp(-exp(-eta z)).
    """
    rate = _check_positive("eta", eta)
    arr = _check_uniform(u)
    z = -np.log(-np.log(arr)) / rate
    return _same_shape(z, u)


def sample_gamma_vector(dimension: int,
                        eta: float,
                        beta: float,
                        rng: np.random.Generator,
                        count: Optional[int] = None) -> np.ndarray:
    """
    Draw x in R^d with density proportional to exp(-eta * ||x||_2 / beta).

    Sampled as a uniform direction on the unit sphere (normalised Gaussian)
    times a Gamma(shape=d, scale=beta/eta) magnitude.

    Args:
        dimension: d >= 1
        eta, beta: positive rate and gradient-norm bound
        rng: numpy Generator
        count: if given, return a (count, d) batch

    Returns:
        Vector of length d, or a (count, d) array
    """
    if int(dimension) != dimension or dimension < 1:
        raise ParameterError(f"dimension must be a positive integer\n  Got: {dimension!r}")
    scale = _check_positive("beta", beta) / _check_positive("eta", eta)

    rows = 1 if count is None else int(count)
    directions = rng.standard_normal((rows, dimension))
    norms = np.linalg.norm(directions, axis=1)
    while np.any(norms == 0.0):
        zero = norms == 0.0
        directions[zero] = rng.standard_normal((int(zero.sum()), dimension))
        norms = np.linalg.norm(directions, axis=1)
    magnitudes = rng.gamma(shape=dimension, scale=scale, size=rows)
    samples = directions / norms[:, None] * magnitudes[:, None]
    return samples[0] if count is None else samples


def laplace_max_abs_mean(dimension: int, scale: float) -> float:
    """E[max_j |x_j|] for d i.i.d. Laplace(scale) coordinates: scale * H_d."""
    return scale * math.fsum(1.0 / k for k in range(1, dimension + 1))


# ===================================
# RUNNING STATISTICS
# ===================================

def _check_observation(value: float, low: float, high: float) -> float:
    if not np.isfinite(value) or value < low - OBSERVATION_SLACK or value > high + OBSERVATION_SLACK:
        raise EnvironmentContractError(
            f"Observation {value!r} is outside the declared range [{low}, {high}]"
        )
    return float(value)


@dataclass(frozen=True)
class SampleStats:
    """
    Count, sample mean and biased (divide-by-s) sample variance.

    mean and variance are NaN while count == 0; policies treat that as
    "never observed" and must not rank on it.
    """
    count: int = 0
    running_mean: float = 0.0
    sq_dev: float = 0.0

    @property
    def mean(self) -> float:
        return self.running_mean if self.count else math.nan

    @property
    def variance(self) -> float:
        return max(self.sq_dev / self.count, 0.0) if self.count else math.nan


def update_stats(stats: SampleStats,
                 observation: float,
                 low: float = 0.0,
                 high: float = 1.0) -> SampleStats:
    """
    Fold one observation into stats (Welford one-pass update).

    Raises:
        EnvironmentContractError: observation outside [low, high]
    """
    x = _check_observation(observation, low, high)
    count = stats.count + 1
    delta = x - stats.running_mean
    mean = stats.running_mean + delta / count
    return SampleStats(count, mean, stats.sq_dev + delta * (x - mean))


def merge_stats(left: SampleStats, right: SampleStats) -> SampleStats:
    """Pairwise (Chan) merge of two disjoint samples."""
    if left.count == 0:
        return right
    if right.count == 0:
        return left
    count = left.count + right.count
    delta = right.running_mean - left.running_mean
    mean = left.running_mean + delta * right.count / count
    sq_dev = left.sq_dev + right.sq_dev + delta * delta * left.count * right.count / count
    return SampleStats(count, mean, sq_dev)


class RunningStats:
    """
    A table of SampleStats indexed 0..size-1, stored as numpy arrays.

    Usage:
        stats = RunningStats(3)
        stats.update(1, 0.7)
        stats.means()       # [nan, 0.7, nan]
        stats.snapshot(1)   # SampleStats(count=1, running_mean=0.7, sq_dev=0.0)
    """

    def __init__(self, size: int, low: float = 0.0, high: float = 1.0):
        self.size = int(size)
        self.low = low
        self.high = high
        self.counts = np.zeros(self.size, dtype=np.int64)
        self._means = np.zeros(self.size)
        self._sq_devs = np.zeros(self.size)

    def update(self, index: int, value: float) -> None:
        x = _check_observation(value, self.low, self.high)
        count = int(self.counts[index]) + 1
        old_mean = float(self._means[index])
        delta = x - old_mean
        new_mean = old_mean + delta / count
        self._means[index] = new_mean
        self._sq_devs[index] += delta * (x - new_mean)
        self.counts[index] = count

    def means(self) -> np.ndarray:
        return np.where(self.counts > 0, self._means, np.nan)

    def variances(self) -> np.ndarray:
        safe = np.maximum(self.counts, 1)
        return np.where(self.counts > 0, np.maximum(self._sq_devs / safe, 0.0), np.nan)

    def snapshot(self, index: int) -> SampleStats:
        return SampleStats(int(self.counts[index]), float(self._means[index]), float(self._sq_devs[index]))


# ===================================
# OPTION SETS AND LINEAR ARGMIN
# ===================================

@dataclass(frozen=True, eq=False)
class OptionSet:
    """
    Decision space W for online linear optimisation.

    kind:
        hypercube - all corners of [-1, 1]^d
        simplex   - the d unit vectors (the experts setting)
        explicit  - a finite list of points inside [-1, 1]^d

    Usage:
        OptionSet.hypercube(3)
        OptionSet.simplex(10)
        OptionSet.explicit([[0, 0], [1, 1]])
    """
    kind: str
    dimension: int
    points: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in OPTION_KINDS:
            raise ParameterError(
                f"Unknown option-set kind '{self.kind}'\n"
                f"Available kinds: {', '.join(OPTION_KINDS)}"
            )
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ParameterError(f"Option-set dimension must be >= 1\n  Got: {self.dimension!r}")
        if self.kind == "explicit":
            if self.points is None:
                raise ParameterError("Explicit option sets need a list of points")
            pts = np.array(self.points, dtype=float)
            if pts.ndim != 2 or pts.shape[0] == 0:
                raise ParameterError("Explicit option sets need a non-empty 2-D list of points")
            if pts.shape[1] != self.dimension:
                raise DimensionMismatchError(
                    f"Points have dimension {pts.shape[1]}, option set declares {self.dimension}"
                )
            if not np.all(np.isfinite(pts)) or np.any(np.abs(pts) > 1.0):
                raise ParameterError("Every explicit point must lie inside [-1, 1]^d")
            pts.setflags(write=False)
            object.__setattr__(self, "points", pts)

    @classmethod
    def hypercube(cls, dimension: int) -> "OptionSet":
        return cls("hypercube", dimension)

    @classmethod
    def simplex(cls, dimension: int) -> "OptionSet":
        return cls("simplex", dimension)

    @classmethod
    def explicit(cls, points) -> "OptionSet":
        pts = np.array(points, dtype=float)
        return cls("explicit", int(pts.shape[1]) if pts.ndim == 2 else 0, pts)

    def enumerate_points(self, limit: int = 1 << 12) -> np.ndarray:
        """All options as rows (hypercube corners in lexicographic order)."""
        if self.kind == "explicit":
            return np.array(self.points)
        if self.kind == "simplex":
            return np.eye(self.dimension)
        if 2 ** self.dimension > limit:
            raise ParameterError(
                f"Hypercube with d={self.dimension} has {2 ** self.dimension} corners (limit {limit})"
            )
        return np.array(list(product((-1.0, 1.0), repeat=self.dimension)))

    def diameter_l1(self) -> float:
        """D = max ||w - w'||_1 over the option set (reporting constant)."""
        if self.kind == "hypercube":
            return 2.0 * self.dimension
        if self.kind == "simplex":
            return 2.0 if self.dimension > 1 else 0.0
        pts = self.points
        return float(np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2).max())


def _as_vector(values: ArrayLike, dimension: int, what: str = "cost") -> np.ndarray:
    vec = np.asarray(values, dtype=float)
    if vec.shape != (dimension,):
        raise DimensionMismatchError(
            f"{what} has shape {vec.shape}, expected ({dimension},)"
        )
    return vec


def argmin_index(options: OptionSet, cost: ArrayLike) -> int:
    """Index of the minimising option for simplex or explicit sets (lowest index on ties)."""
    vec = _as_vector(cost, options.dimension)
    if options.kind == "simplex":
        return int(np.argmin(vec))
    if options.kind == "explicit":
        return int(np.argmin(options.points @ vec))
    raise ParameterError("Hypercube options have no index; use argmin_linear")


def argmin_linear(options: OptionSet, cost: ArrayLike) -> np.ndarray:
    """
    Option minimising <cost, w>.

    hypercube: coordinatewise -sign(cost_j), zero costs map to -1
    simplex:   unit vector of the smallest coordinate (lowest index on ties)
    explicit:  lowest-index minimiser
    """
    vec = _as_vector(cost, options.dimension)
    if options.kind == "hypercube":
        return np.where(vec < 0.0, 1.0, -1.0)
    if options.kind == "simplex":
        point = np.zeros(options.dimension)
        point[int(np.argmin(vec))] = 1.0
        return point
    return np.array(options.points[int(np.argmin(options.points @ vec))])


def hindsight_losses(options: OptionSet, cumulative: np.ndarray) -> np.ndarray:
    """min_w <L_t, w> for every row L_t of a (T, d) cumulative-loss matrix."""
    if options.kind == "hypercube":
        return -np.abs(cumulative).sum(axis=1)
    if options.kind == "simplex":
        return cumulative.min(axis=1)
    return (cumulative @ options.points.T).min(axis=1)


# ===================================
# LOSSES
# ===================================

@dataclass
class CumulativeLoss:
    """L^{t-1}: running sum of loss vectors, plus the step counter."""
    vector: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, dimension: int) -> "CumulativeLoss":
        return cls(np.zeros(dimension), 0)

    def add(self, loss: ArrayLike) -> None:
        self.vector = self.vector + _as_vector(loss, self.vector.shape[0], "loss")
        self.step += 1


def validate_loss_vector(loss: ArrayLike, dimension: int,
                         low: float = -1.0, high: float = 1.0) -> np.ndarray:
    vec = _as_vector(loss, dimension, "loss")
    if not np.all(np.isfinite(vec)) or np.any(vec < low) or np.any(vec > high):
        raise EnvironmentContractError(
            f"Loss vector leaves the declared range [{low}, {high}]\n"
            f"  Got: {vec.tolist()}"
        )
    return vec


@dataclass(frozen=True, eq=False)
class QuadraticFormLoss:
    """
    Convex loss l(w) = a*||w||^2 + <g, w> + c with a >= 0.

    Covers ||w - v||^2 (a=1, g=-2v, c=||v||^2) and linear losses (a=0).
    Sums of such losses stay in the family, so L^{t-1} is one object.
    """
    curvature: float
    linear: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        if self.curvature < 0 or not np.isfinite(self.curvature):
            raise ParameterError(f"Quadratic losses need curvature >= 0\n  Got: {self.curvature!r}")
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float))

    @classmethod
    def zero(cls, dimension: int) -> "QuadraticFormLoss":
        return cls(0.0, np.zeros(dimension), 0.0)

    @classmethod
    def centered(cls, center: ArrayLike, scale: float = 1.0) -> "QuadraticFormLoss":
        v = np.asarray(center, dtype=float)
        return cls(scale, -2.0 * scale * v, scale * float(v @ v))

    @classmethod
    def linear_loss(cls, cost: ArrayLike) -> "QuadraticFormLoss":
        return cls(0.0, np.asarray(cost, dtype=float), 0.0)

    @property
    def dimension(self) -> int:
        return int(self.linear.shape[0])

    def value(self, w: ArrayLike) -> float:
        point = np.asarray(w, dtype=float)
        return float(self.curvature * (point @ point) + self.linear @ point + self.offset)

    def gradient(self, w: ArrayLike) -> np.ndarray:
        return 2.0 * self.curvature * np.asarray(w, dtype=float) + self.linear

    def __add__(self, other: "QuadraticFormLoss") -> "QuadraticFormLoss":
        if other.dimension != self.dimension:
            raise DimensionMismatchError(
                f"Cannot add losses of dimension {self.dimension} and {other.dimension}"
            )
        return QuadraticFormLoss(self.curvature + other.curvature,
                                 self.linear + other.linear,
                                 self.offset + other.offset)


# ===================================
# PARAMETERS
# ===================================

class AlgoParams(BaseModel):
    """
    Algorithm parameters shared by every policy.

    eta:     privacy / learning rate in (0, 0.4]
    epsilon: optimistic-variance weight of the k=3 policy
    p:       probability of following the hint (imperfect hints)
    budget:  corruption budget B (None: use the environment corruption budget)
    k:       probes per step (None: the policy's own count)
    beta, gamma: gradient-norm and Hessian-eigenvalue bounds (convex setting)
    """
    model_config = ConfigDict(extra="forbid")

    eta: float = Field(MAX_ETA, gt=0.0, le=MAX_ETA)
    epsilon: float = Field(DEFAULT_EPSILON, gt=0.0)
    p: float = Field(1.0, ge=0.0, le=1.0)
    budget: Optional[int] = Field(None, ge=0)
    k: Optional[int] = None
    beta: float = Field(1.0, gt=0.0)
    gamma: float = Field(0.0, ge=0.0)

    @field_validator("k")
    def k_is_supported(cls, v):
        if v is not None and v not in (2, 3, 4):
            raise ValueError("k (probes per step) must be 2, 3 or 4")
        return v

    @classmethod
    def for_imperfect_hints(cls, budget: int, **overrides) -> "AlgoParams":
        """eta = 1 / (5 * sqrt(B + 1)) and p = 5 * eta."""
        eta = 1.0 / (5.0 * math.sqrt(budget + 1))
        return cls(eta=eta, p=min(1.0, 5.0 * eta), budget=budget, **overrides)


# ===================================
# TRACE AND REGRET ACCOUNTING
# ===================================

@dataclass
class Trace:
    """
    Per-step record of one run.

    probed:   per step, the probed arms (bandits) or probed candidates (online)
    feedback: per step, the best index returned, the probed values, or None
    actions:  (T,) arm indices or (T, d) points played
    realized: realised loss (online) or reward credited (bandits)
    expected: exact expected credit (bandits) or the realised loss again (online)
    regret:   running regret / pseudo-regret through each step
    """
    policy: str
    horizon: int
    n_options: int
    probed: List[tuple]
    feedback: List[object]
    actions: np.ndarray
    realized: np.ndarray
    expected: np.ndarray
    regret: np.ndarray
    extras: Dict[str, np.ndarray] = field(default_factory=dict)
    summary: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(self.probed), len(self.feedback), len(self.actions),
                   len(self.realized), len(self.expected), len(self.regret)}
        lengths.update(len(v) for v in self.extras.values())
        if lengths != {self.horizon}:
            raise DimensionMismatchError(
                f"Trace columns must all have length T={self.horizon}, got {sorted(lengths)}"
            )

    @property
    def final_regret(self) -> float:
        return float(self.regret[-1])

    def to_frame(self) -> pd.DataFrame:
        actions = [tuple(float(x) for x in row) if np.ndim(row) else int(row) for row in self.actions]
        frame = pd.DataFrame({
            "t": np.arange(1, self.horizon + 1),
            "probed": [repr(p) for p in self.probed],
            "feedback": [repr(f) for f in self.feedback],
            "action": [repr(a) for a in actions],
            "realized": self.realized,
            "expected": self.expected,
            "regret": self.regret,
        })
        for name, column in sorted(self.extras.items()):
            frame[name] = column
        return frame


def save_trace(trace: Trace, path: Union[str, Path]) -> Path:
    """Write a trace as CSV (floats in shortest round-trip form)."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    trace.to_frame().to_csv(target, index=False)
    return target


def load_trace(path: Union[str, Path], policy: str = "", n_options: int = 0) -> Trace:
    """Read a trace written by save_trace."""
    frame = pd.read_csv(path, float_precision="round_trip", keep_default_na=False,
                        dtype={"probed": str, "feedback": str, "action": str})
    actions = [ast.literal_eval(a) for a in frame["action"]]
    extras = {c: frame[c].to_numpy() for c in frame.columns
              if c not in ("t", "probed", "feedback", "action", "realized", "expected", "regret")}
    return Trace(
        policy=policy,
        horizon=len(frame),
        n_options=n_options,
        probed=[ast.literal_eval(p) for p in frame["probed"]],
        feedback=[ast.literal_eval(f) for f in frame["feedback"]],
        actions=np.array(actions, dtype=float if isinstance(actions[0], tuple) else np.int64),
        realized=frame["realized"].to_numpy(dtype=float),
        expected=frame["expected"].to_numpy(dtype=float),
        regret=frame["regret"].to_numpy(dtype=float),
        extras=extras,
    )


def _played_losses(actions: np.ndarray, options: OptionSet, losses: np.ndarray) -> np.ndarray:
    if actions.ndim == 1:
        if options.kind != "simplex":
            raise DimensionMismatchError("Index actions are only meaningful for simplex options")
        return losses[np.arange(losses.shape[0]), actions.astype(np.int64)]
    return np.einsum("td,td->t", losses, actions)


def _loss_matrix(trace: Trace, options: OptionSet, losses) -> Tuple[np.ndarray, np.ndarray]:
    matrix = np.asarray(losses, dtype=float)
    actions = np.asarray(trace.actions)
    if matrix.ndim != 2 or matrix.shape[0] != len(actions) or matrix.shape[1] != options.dimension:
        raise DimensionMismatchError(
            f"Loss sequence shape {matrix.shape} does not match trace length {len(actions)} "
            f"and dimension {options.dimension}"
        )
    return matrix, actions


def regret_linear(trace: Trace, options: OptionSet, losses) -> float:
    """
    sum_t <l^t, w^t> - min_w sum_t <l^t, w>, the benchmark via argmin_linear on L^T.

    Raises:
        DimensionMismatchError: trace and loss sequence lengths differ
    """
    matrix, actions = _loss_matrix(trace, options, losses)
    played = math.fsum(_played_losses(actions, options, matrix))
    best = argmin_linear(options, matrix.sum(axis=0))
    return played - math.fsum(matrix @ best)


def running_regret_linear(actions: np.ndarray, options: OptionSet, losses: np.ndarray) -> np.ndarray:
    """Regret through each t against the hindsight leader of the first t steps."""
    matrix = np.asarray(losses, dtype=float)
    played = np.cumsum(_played_losses(np.asarray(actions), options, matrix))
    return played - hindsight_losses(options, np.cumsum(matrix, axis=0))


def pseudo_regret_mab(trace: Trace, means: ArrayLike) -> float:
    """
    T * max_i mu_i minus the credited expected reward.

    The credit at step t is the exact E[max over the exploit-probed set]
    when the environment can compute it, otherwise the realised max.

    Raises:
        DimensionMismatchError: len(means) differs from the number of arms
    """
    mu = np.asarray(means, dtype=float)
    if mu.ndim != 1 or mu.shape[0] != trace.n_options:
        raise DimensionMismatchError(
            f"Got {mu.shape[0] if mu.ndim == 1 else mu.shape} means for {trace.n_options} arms"
        )
    return trace.horizon * float(mu.max()) - math.fsum(trace.expected)


def running_pseudo_regret(expected: np.ndarray, best_mean: float) -> np.ndarray:
    return np.cumsum(best_mean - np.asarray(expected, dtype=float))


NoiseSampler = Callable[[float, ArrayLike], ArrayLike]
