"""
Exact Oracle
============
Exact computations over finite discrete distributions, used to check the
reverse-prophet inequalities, the privacy ratios and the gain identity on
small instances, plus Monte-Carlo checks of the sample mean / variance
tail bounds.

"Exact" here means enumeration over the (joint) support with math.fsum
accumulation; every comparison made by callers uses EXACT_SLACK.

Used by: env.py (arm laws, expected max), verify.py (lemma and tail suites)
"""

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from probe_lab.core import (
    EXACT_SLACK,
    ParameterError,
    UndefinedRatioError,
)


# ── Constants ─────────────────────────────────────────────────────────────────

TAIL_BOUNDS      = ("mean-dev", "var-upper", "var-lower")
MIN_TAIL_Q       = 1.0 / 18.0
MIN_TAIL_TRIALS  = 10_000
VAR_LOWER_FACTOR = 0.65
TAIL_RATE        = 23.0     # denominator in 3 exp(-q sigma^2 s / 23)
VAR_LOWER_RATE   = 0.01

# Cap on the number of uniform draws held in memory by one tail batch
_TAIL_BATCH_DRAWS = 2_000_000

# Largest product support independent() will materialise
_MAX_JOINT_OUTCOMES = 1 << 16


# ===================================
# DISCRETE DISTRIBUTIONS
# ===================================

@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """
    Finite-support probability mass function over real values.

    values are strictly increasing; probabilities are non-negative and sum
    to 1 within EXACT_SLACK. Zero masses are allowed so two laws can share
    a grid.

    Usage:
        D = DiscreteDistribution.bernoulli(0.4)
        D.mass_at(1.0)           # 0.4
        DiscreteDistribution.from_pairs([0.2, 0.2, 0.5], [0.25, 0.25, 0.5])
    """
    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        probs = np.array(self.probs, dtype=float).reshape(-1)
        if values.shape != probs.shape or values.size == 0:
            raise ParameterError(
                f"Distribution needs matching, non-empty values and probabilities\n"
                f"  Got {values.size} values and {probs.size} probabilities"
            )
        if not np.all(np.isfinite(values)) or not np.all(np.isfinite(probs)):
            raise ParameterError("Distribution values and probabilities must be finite")
        if np.any(probs < 0):
            raise ParameterError(f"Probabilities must be non-negative\n  Got: {probs.tolist()}")
        total = math.fsum(probs)
        if abs(total - 1.0) > EXACT_SLACK:
            raise ParameterError(
                f"Probabilities must sum to 1 (within {EXACT_SLACK})\n  Got total: {total!r}"
            )
        order = np.argsort(values, kind="stable")
        values, probs = values[order], probs[order]
        if np.any(np.diff(values) == 0):
            raise ParameterError(
                "Distribution values must be distinct; use DiscreteDistribution.from_pairs to merge"
            )
        values.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    # ── Constructors ───────────────────────────────────────────────────

    @classmethod
    def from_pairs(cls, values: Iterable[float], probs: Iterable[float]) -> "DiscreteDistribution":
        """Build from possibly repeated values, summing the masses of duplicates."""
        vals = np.asarray(list(values), dtype=float)
        ps = np.asarray(list(probs), dtype=float)
        if vals.shape != ps.shape:
            raise ParameterError("from_pairs needs one probability per value")
        unique, inverse = np.unique(vals, return_inverse=True)
        merged = [math.fsum(ps[inverse == k]) for k in range(unique.size)]
        return cls(unique, np.array(merged))

    @classmethod
    def point_mass(cls, value: float) -> "DiscreteDistribution":
        return cls(np.array([value]), np.array([1.0]))

    @classmethod
    def bernoulli(cls, p: float) -> "DiscreteDistribution":
        if not 0.0 <= p <= 1.0:
            raise ParameterError(f"Bernoulli parameter must lie in [0, 1]\n  Got: {p!r}")
        return cls(np.array([0.0, 1.0]), np.array([1.0 - p, p]))

    @classmethod
    def uniform(cls, values: Sequence[float]) -> "DiscreteDistribution":
        vals = list(values)
        return cls.from_pairs(vals, [1.0 / len(vals)] * len(vals))

    # ── Queries ────────────────────────────────────────────────────────

    @property
    def support(self) -> np.ndarray:
        """Values carrying positive mass."""
        return self.values[self.probs > 0]

    def mass_at(self, value: float) -> float:
        k = int(np.searchsorted(self.values, value))
        if k < self.values.size and self.values[k] == value:
            return float(self.probs[k])
        return 0.0

    def cdf(self, value: float) -> float:
        """Pr[X <= value]."""
        k = int(np.searchsorted(self.values, value, side="right"))
        return min(1.0, math.fsum(self.probs[:k]))

    def survival(self, value: float) -> float:
        """Pr[X >= value]."""
        k = int(np.searchsorted(self.values, value, side="left"))
        return min(1.0, math.fsum(self.probs[k:]))

    def sample(self, rng: np.random.Generator, size=None):
        return _draw(self.values, self.probs, rng, size)

    def in_unit_interval(self) -> bool:
        return bool(np.all(self.support >= 0.0) and np.all(self.support <= 1.0))


def _draw(values: np.ndarray, probs: np.ndarray, rng: np.random.Generator, size=None):
    """Inverse-CDF draw; zero-mass entries are never returned."""
    cum = np.cumsum(probs)
    last = int(np.flatnonzero(probs > 0)[-1])
    u = rng.random(size)
    idx = np.minimum(np.searchsorted(cum, u, side="right"), last)
    return values[idx] if size is not None else float(values[int(idx)])


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """
    Finite joint law over n coordinates: row k of outcomes has mass probs[k].

    Usage:
        J = JointDistribution.independent([D1, D2])
        J.marginal(0)            # DiscreteDistribution equal to D1
        J.project(1, 0)          # coordinates swapped
    """
    outcomes: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        outcomes = np.array(self.outcomes, dtype=float)
        probs = np.array(self.probs, dtype=float).reshape(-1)
        if outcomes.ndim != 2 or outcomes.shape[0] != probs.size or probs.size == 0:
            raise ParameterError(
                f"Joint table needs an (m, n) outcome matrix and m probabilities\n"
                f"  Got outcomes {outcomes.shape} and {probs.size} probabilities"
            )
        if not np.all(np.isfinite(outcomes)) or np.any(probs < 0):
            raise ParameterError("Joint outcomes must be finite and probabilities non-negative")
        total = math.fsum(probs)
        if abs(total - 1.0) > EXACT_SLACK:
            raise ParameterError(f"Joint probabilities must sum to 1\n  Got total: {total!r}")
        outcomes.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def independent(cls, dists: Sequence[DiscreteDistribution]) -> "JointDistribution":
        """Product law of independent coordinates."""
        size = math.prod(d.values.size for d in dists)
        if size > _MAX_JOINT_OUTCOMES:
            raise ParameterError(f"Product support of {size} outcomes is too large to enumerate")
        rows, masses = [], []
        for combo in product(*(range(d.values.size) for d in dists)):
            rows.append([d.values[k] for d, k in zip(dists, combo)])
            masses.append(math.prod(d.probs[k] for d, k in zip(dists, combo)))
        masses = np.array(masses)
        return cls(np.array(rows), masses / math.fsum(masses))

    @property
    def n_coords(self) -> int:
        return int(self.outcomes.shape[1])

    def marginal(self, coord: int) -> DiscreteDistribution:
        return DiscreteDistribution.from_pairs(self.outcomes[:, coord], self.probs)

    def project(self, *coords: int) -> "JointDistribution":
        return JointDistribution(self.outcomes[:, list(coords)], self.probs)

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        """One joint row (shape (n,)) or a (size, n) block of rows."""
        cum = np.cumsum(self.probs)
        last = int(np.flatnonzero(self.probs > 0)[-1])
        u = rng.random(size)
        idx = np.minimum(np.searchsorted(cum, u, side="right"), last)
        return np.array(self.outcomes[idx])


Joint = Optional[JointDistribution]


# ===================================
# MOMENTS AND MINIMA
# ===================================

def expect(dist: DiscreteDistribution) -> float:
    return math.fsum(dist.values * dist.probs)


def variance(dist: DiscreteDistribution) -> float:
    mu = expect(dist)
    return math.fsum(dist.probs * (dist.values - mu) ** 2)


def expect_min_two_iid(dist: DiscreteDistribution) -> float:
    """
    E[min(A, B)] for A, B i.i.d. from dist, via the squared survival function:

        E[min] = v_0 + sum_k (v_k - v_{k-1}) * Pr[X >= v_k]^2
    """
    vals = dist.values
    tail = np.cumsum(dist.probs[::-1])[::-1]  # Pr[X >= v_k]
    steps = np.diff(vals) * np.minimum(tail[1:], 1.0) ** 2
    return math.fsum([float(vals[0]), *steps])


def expect_min_two_iid_bruteforce(dist: DiscreteDistribution) -> float:
    return math.fsum(
        pa * pb * min(a, b)
        for (a, pa), (b, pb) in product(zip(dist.values, dist.probs), repeat=2)
    )


def expect_mixed_min(dist: DiscreteDistribution, p: float) -> float:
    """E[Z] where Z = min(A, B) with probability p and Z = A otherwise."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"Mixing probability must lie in [0, 1]\n  Got: {p!r}")
    return (1.0 - p) * expect(dist) + p * expect_min_two_iid(dist)


# ===================================
# PRIVACY RATIOS
# ===================================

def dp_ratio(first: DiscreteDistribution, second: DiscreteDistribution) -> float:
    """
    Smallest eta' with exp(-eta') <= P1(w)/P2(w) <= exp(eta') on the union support.

    Raises:
        UndefinedRatioError: a value carries mass under one law and none under the other
    """
    union = np.union1d(first.support, second.support)
    worst = 0.0
    for value in union:
        p1, p2 = first.mass_at(value), second.mass_at(value)
        if p1 <= 0.0 or p2 <= 0.0:
            raise UndefinedRatioError(
                f"Probability ratio undefined at value {value!r}: masses {p1!r} and {p2!r}"
            )
        worst = max(worst, abs(math.log(p1) - math.log(p2)))
    return worst


def hedge_probabilities(log_weights: np.ndarray) -> np.ndarray:
    lw = np.asarray(log_weights, dtype=float)
    return np.exp(lw - logsumexp(lw))


def hedge_dp_ratio(log_weights: np.ndarray, loss: np.ndarray, eta: float) -> float:
    """max_i |ln p'_i - ln p_i| across one multiplicative-weights update."""
    lw = np.asarray(log_weights, dtype=float)
    before = lw - logsumexp(lw)
    updated = lw - eta * np.asarray(loss, dtype=float)
    after = updated - logsumexp(updated)
    return float(np.max(np.abs(after - before)))


def hedge_domination_gap(log_weights: np.ndarray, loss: np.ndarray, eta: float) -> float:
    """
    E[min of two draws from p evaluated on loss] - E[draw from p' on loss].

    Non-positive whenever the update is eta-private with eta <= 0.4.
    """
    loss = np.asarray(loss, dtype=float)
    before = hedge_probabilities(log_weights)
    after = hedge_probabilities(np.asarray(log_weights, dtype=float) - eta * loss)
    two_draws = DiscreteDistribution.from_pairs(loss, before / math.fsum(before))
    return expect_min_two_iid(two_draws) - math.fsum(after * loss)


# ===================================
# MAXIMA AND GAINS
# ===================================

def max_distribution(dists: Sequence[DiscreteDistribution]) -> DiscreteDistribution:
    """Law of the max of independent variables (product of CDFs)."""
    grid = np.unique(np.concatenate([d.values for d in dists]))
    cdf = np.ones(grid.size)
    for d in dists:
        cdf *= np.array([d.cdf(v) for v in grid])
    masses = np.maximum(np.diff(np.concatenate([[0.0], cdf])), 0.0)
    return DiscreteDistribution(grid, masses / math.fsum(masses))


def _check_marginals(joint: JointDistribution, *dists: DiscreteDistribution) -> None:
    if joint.n_coords != len(dists):
        raise ParameterError(
            f"Joint table has {joint.n_coords} coordinates, expected {len(dists)}"
        )
    for coord, declared in enumerate(dists):
        observed = joint.marginal(coord)
        grid = np.union1d(observed.values, declared.values)
        gap = max(abs(observed.mass_at(v) - declared.mass_at(v)) for v in grid)
        if gap > EXACT_SLACK:
            raise ParameterError(
                f"Joint marginal {coord} differs from its declared law by {gap:.3e}"
            )


def expect_max(x: DiscreteDistribution, y: DiscreteDistribution, joint: Joint = None) -> float:
    """
    E[max(X, Y)]; independent unless joint is given.

    The joint table's columns follow the argument order (X then Y) and its
    marginals must match x and y within EXACT_SLACK.
    """
    if joint is None:
        return expect(max_distribution([x, y]))
    _check_marginals(joint, x, y)
    return math.fsum(joint.probs * joint.outcomes.max(axis=1))


def expect_max_bruteforce(x: DiscreteDistribution, y: DiscreteDistribution) -> float:
    return math.fsum(
        px * py * max(a, b)
        for (a, px), (b, py) in product(zip(x.values, x.probs), zip(y.values, y.probs))
    )


def expect_max_many(arms: Union[Sequence[DiscreteDistribution], JointDistribution],
                    subset: Sequence[int]) -> float:
    """E[max over the arms in subset] for independent arms or a joint table."""
    chosen = list(subset)
    if isinstance(arms, JointDistribution):
        return math.fsum(arms.probs * arms.outcomes[:, chosen].max(axis=1))
    return expect(max_distribution([arms[i] for i in chosen]))


def meta_stats(x: DiscreteDistribution, y: DiscreteDistribution,
               joint: Joint = None) -> Tuple[float, float]:
    """(mean, variance) of max(X, Y)."""
    if joint is None:
        law = max_distribution([x, y])
    else:
        _check_marginals(joint, x, y)
        law = DiscreteDistribution.from_pairs(joint.outcomes.max(axis=1), joint.probs)
    return expect(law), variance(law)


def gain_exact(xj: DiscreteDistribution, xi: DiscreteDistribution, joint: Joint = None) -> float:
    """G_ji = E[(X_j - X_i)_+]; joint columns are (X_j, X_i)."""
    if joint is None:
        return math.fsum(
            pj * pi * max(a - b, 0.0)
            for (a, pj), (b, pi) in product(zip(xj.values, xj.probs), zip(xi.values, xi.probs))
        )
    _check_marginals(joint, xj, xi)
    return math.fsum(joint.probs * np.maximum(joint.outcomes[:, 0] - joint.outcomes[:, 1], 0.0))


def check_max_gain_identity(joint: JointDistribution, i: int, j: int) -> float:
    """|E[max(X_i, X_j)] - (mu_i + G_ji)| on a joint table (zero up to rounding)."""
    xi, xj = joint.marginal(i), joint.marginal(j)
    pair = joint.project(i, j)
    lhs = expect_max(xi, xj, pair)
    rhs = expect(xi) + gain_exact(xj, xi, joint.project(j, i))
    return abs(lhs - rhs)


# ===================================
# TAIL BOUNDS (MONTE CARLO)
# ===================================

def tail_bound(dist: DiscreteDistribution, s: int, bound_id: str, q: float = 1.0) -> float:
    """
    Closed-form tail bound for the s-sample mean / biased variance.

    mean-dev:  Pr[|m - mu| > q sigma^2]        <= 3 exp(-q sigma^2 s / 23)
    var-upper: Pr[V > (1 + q) sigma^2]         <= 3 exp(-q sigma^2 s / 23)
    var-lower: Pr[V < 0.65 sigma^2]            <= 3 exp(-0.01 sigma^2 s)
    """
    if bound_id not in TAIL_BOUNDS:
        raise ParameterError(f"Unknown tail bound '{bound_id}'\nAvailable: {', '.join(TAIL_BOUNDS)}")
    sigma2 = variance(dist)
    if bound_id == "var-lower":
        return 3.0 * math.exp(-VAR_LOWER_RATE * sigma2 * s)
    if q < MIN_TAIL_Q:
        raise ParameterError(f"Tail bound '{bound_id}' needs q >= 1/18\n  Got: q={q!r}")
    return 3.0 * math.exp(-q * sigma2 * s / TAIL_RATE)


def tail_statistics(dist: DiscreteDistribution, s: int, trials: int,
                    rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sample means and biased sample variances of `trials` independent s-sample experiments.

    Draws are made in row batches so at most ~2e6 uniforms are live at once.
    """
    if s < 1 or trials < 1:
        raise ParameterError(f"Need s >= 1 and trials >= 1\n  Got: s={s}, trials={trials}")
    means = np.empty(trials)
    variances = np.empty(trials)
    rows_per_batch = max(1, _TAIL_BATCH_DRAWS // s)
    for start in range(0, trials, rows_per_batch):
        stop = min(trials, start + rows_per_batch)
        block = dist.sample(rng, size=(stop - start, s))
        means[start:stop] = block.mean(axis=1)
        variances[start:stop] = block.var(axis=1)
    return means, variances


def tail_event_rate(dist: DiscreteDistribution, means: np.ndarray, variances: np.ndarray,
                    bound_id: str, q: float = 1.0) -> float:
    """Fraction of experiments whose (m, V) falls in the bound's bad event."""
    mu, sigma2 = expect(dist), variance(dist)
    if bound_id == "mean-dev":
        events = np.abs(means - mu) > q * sigma2 + EXACT_SLACK
    elif bound_id == "var-upper":
        events = variances > (1.0 + q) * sigma2 + EXACT_SLACK
    elif bound_id == "var-lower":
        events = variances < VAR_LOWER_FACTOR * sigma2 - EXACT_SLACK
    else:
        raise ParameterError(f"Unknown tail bound '{bound_id}'\nAvailable: {', '.join(TAIL_BOUNDS)}")
    return float(np.mean(events))


def tail_violation_rate(dist: DiscreteDistribution, s: int, bound_id: str, q: float,
                        trials: int, rng: np.random.Generator) -> float:
    """
    Monte-Carlo frequency of a tail bound's event over `trials` s-sample experiments.

    Raises:
        ParameterError: q < 1/18 for mean-dev / var-upper, or trials < 10^4
    """
    if bound_id not in TAIL_BOUNDS:
        raise ParameterError(f"Unknown tail bound '{bound_id}'\nAvailable: {', '.join(TAIL_BOUNDS)}")
    if bound_id != "var-lower" and q < MIN_TAIL_Q:
        raise ParameterError(f"Tail bound '{bound_id}' needs q >= 1/18\n  Got: q={q!r}")
    if trials < MIN_TAIL_TRIALS:
        raise ParameterError(f"Tail checks need at least {MIN_TAIL_TRIALS} trials\n  Got: {trials}")
    means, variances = tail_statistics(dist, s, trials, rng)
    return tail_event_rate(dist, means, variances, bound_id, q)


def chernoff_bound(mu: float, delta: float, regime: str = "small") -> float:
    """
    Multiplicative Chernoff bound.

    small (0 <= delta <= 1): exp(-mu delta^2 / 3)
    large (delta >= 1):      exp(-mu delta / 3)
    """
    if regime == "small":
        if not 0.0 <= delta <= 1.0:
            raise ParameterError(f"Small-deviation regime needs delta in [0, 1]\n  Got: {delta!r}")
        return math.exp(-mu * delta * delta / 3.0)
    if regime == "large":
        if delta < 1.0:
            raise ParameterError(f"Large-deviation regime needs delta >= 1\n  Got: {delta!r}")
        return math.exp(-mu * delta / 3.0)
    raise ParameterError(f"Unknown Chernoff regime '{regime}' (use 'small' or 'large')")


def correlation_error_bound(t: float, delta: float, n: int) -> float:
    """2 exp(-t delta^2 / 4n): chance the top empirical mean is off by delta at time t."""
    return 2.0 * math.exp(-t * delta * delta / (4.0 * n))


def correlation_check_time(n: int, delta: float) -> int:
    """t = 4 n ln(200) / delta^2, where the error bound drops to 1/100."""
    return int(math.ceil(4.0 * n * math.log(200.0) / (delta * delta)))


# ===================================
# RANDOM INSTANCES
# ===================================

def _random_values(rng: np.random.Generator, size: int, grid: Optional[int]) -> np.ndarray:
    if grid:
        return np.unique(rng.integers(0, grid + 1, size=size) / grid)
    return np.unique(rng.random(size))


def random_distribution(rng: np.random.Generator, max_support: int = 6,
                        grid: Optional[int] = None) -> DiscreteDistribution:
    """Random law on [0, 1] with 1..max_support atoms (optionally on a k/grid lattice)."""
    values = _random_values(rng, int(rng.integers(1, max_support + 1)), grid)
    probs = rng.dirichlet(np.ones(values.size))
    return DiscreteDistribution(values, probs / math.fsum(probs))


def random_dp_pair(rng: np.random.Generator, eta: float, max_support: int = 6,
                   max_attempts: int = 10_000) -> Tuple[DiscreteDistribution, DiscreteDistribution]:
    """
    (D1, D2) on a common support with dp_ratio(D1, D2) <= eta.

    P2 is drawn freely; P1 is proportional to P2 * exp(u eta) with u uniform
    on [-1, 1]. Pairs whose renormalised ratio exceeds eta are rejected.
    """
    for _ in range(max_attempts):
        values = _random_values(rng, int(rng.integers(2, max_support + 1)), None)
        p2 = rng.dirichlet(np.ones(values.size))
        p2 = p2 / math.fsum(p2)
        p1 = p2 * np.exp(rng.uniform(-1.0, 1.0, values.size) * eta)
        p1 = p1 / math.fsum(p1)
        try:
            first, second = DiscreteDistribution(values, p1), DiscreteDistribution(values, p2)
            if dp_ratio(first, second) <= eta:
                return first, second
        except (UndefinedRatioError, ParameterError):
            continue
    raise ParameterError(f"No eta={eta} private pair found in {max_attempts} attempts")


def random_joint(rng: np.random.Generator, n_coords: int, max_outcomes: int = 8,
                 grid: Optional[int] = 10) -> JointDistribution:
    """Random joint table on [0, 1]^n with up to max_outcomes rows."""
    rows = int(rng.integers(1, max_outcomes + 1))
    if grid:
        outcomes = rng.integers(0, grid + 1, size=(rows, n_coords)) / grid
    else:
        outcomes = rng.random((rows, n_coords))
    probs = rng.dirichlet(np.ones(rows))
    return JointDistribution(outcomes, probs / math.fsum(probs))


def random_instance(rng: np.random.Generator, n_arms: int, max_support: int = 4,
                    grid: Optional[int] = 10) -> List[DiscreteDistribution]:
    return [random_distribution(rng, max_support, grid) for _ in range(n_arms)]
