"""
Bandit Policies with Probes
===========================
Stochastic bandit policies that probe several arms before committing to one.

    MetaUcbVPolicy        BestProbe, k=2: UCB-V over pairs ("meta-arms") of arms
    ExploreExploitPolicy  AllProbe,  k=3: round-robin explore + top-two exploit
    CorrelationPolicy     AllProbe,  k=4: explore a pair, exploit best mean + best partner
    Ucb1TopTwoPolicy      AllProbe,  k=2: top two UCB1 indices (baseline only)

Each step() talks to a ProbeOracle for one step's rewards and returns a
BanditStep describing what was probed and what was played. Arms are
0-based; pairs are (i, j) with i < j in lexicographic order.
"""

import math
from dataclasses import dataclass
from itertools import combinations
from typing import List, Tuple

import numpy as np

from probe_lab.core import DEFAULT_EPSILON, ParameterError, RunningStats
from probe_lab.env import ProbeFeedback, ProbeOracle


# ── Constants ─────────────────────────────────────────────────────────────────

UCBV_VARIANCE_WEIGHT = 2.4
UCBV_RANGE_WEIGHT    = 3.6
RANKINGS = ("ucb", "mean")


@dataclass(frozen=True)
class BanditStep:
    """What one bandit step probed, which arms it exploited and what it earned."""
    probed: Tuple[int, ...]
    exploit: Tuple[int, ...]
    feedback: ProbeFeedback
    played: int
    reward: float


def _pairs(n: int) -> List[Tuple[int, ...]]:
    return list(combinations(range(n), 2)) if n >= 2 else [(0,)]


def _best_of(arms: Tuple[int, ...], values: dict) -> int:
    return min(arms, key=lambda i: (-values[i], i))


def _unseen_as_inf(estimates: np.ndarray) -> np.ndarray:
    return np.where(np.isnan(estimates), np.inf, estimates)


# ===================================
# INDICES
# ===================================

def ucbv_index(m: float, v: float, s: int, t: int) -> float:
    """
    m + sqrt(2.4 V ln t / s) + 3.6 ln t / s; +inf while s == 0.
    """
    if s == 0:
        return math.inf
    log_t = math.log(t)
    return m + math.sqrt(UCBV_VARIANCE_WEIGHT * v * log_t / s) + UCBV_RANGE_WEIGHT * log_t / s


def ucbv_indices(means: np.ndarray, variances: np.ndarray, counts: np.ndarray, t: int) -> np.ndarray:
    safe = np.maximum(counts, 1)
    log_t = math.log(t)
    index = (np.nan_to_num(means)
             + np.sqrt(UCBV_VARIANCE_WEIGHT * np.nan_to_num(variances) * log_t / safe)
             + UCBV_RANGE_WEIGHT * log_t / safe)
    return np.where(counts > 0, index, np.inf)


def allprobe_index(m: float, v: float, epsilon: float = DEFAULT_EPSILON, s: int = 1) -> float:
    """m + epsilon * V; +inf while s == 0."""
    if s == 0:
        return math.inf
    return m + epsilon * v


def allprobe_indices(means: np.ndarray, variances: np.ndarray, counts: np.ndarray,
                     epsilon: float) -> np.ndarray:
    index = np.nan_to_num(means) + epsilon * np.nan_to_num(variances)
    return np.where(counts > 0, index, np.inf)


# ===================================
# META UCB-V (k = 2, BestProbe)
# ===================================

class MetaUcbVPolicy:
    """
    UCB-V over meta-arms. Probing pair (i, j) with BestProbe and playing the
    winner yields X_ij = max(X_i, X_j), which is the only statistic kept.

    Every pair is played once (lexicographic order) before the index takes over.
    """

    name = "meta_ucbv"
    k = 2

    def __init__(self, n: int):
        if n < 1:
            raise ParameterError(f"Need at least one arm\n  Got: n={n}")
        self.n = n
        self.pairs = _pairs(n)
        self.stats = RunningStats(len(self.pairs))

    def select(self, t: int) -> int:
        unplayed = np.flatnonzero(self.stats.counts == 0)
        if unplayed.size:
            return int(unplayed[0])
        return int(np.argmax(ucbv_indices(self.stats.means(), self.stats.variances(),
                                          self.stats.counts, t)))

    def step(self, t: int, oracle: ProbeOracle) -> BanditStep:
        index = self.select(t)
        pair = self.pairs[index]
        feedback = oracle.best(pair)
        reward = oracle.play(feedback.best)
        self.stats.update(index, reward)
        return BanditStep(probed=pair, exploit=pair, feedback=feedback,
                          played=feedback.best, reward=reward)


# ===================================
# SIMULTANEOUS EXPLORE / EXPLOIT (k = 3, AllProbe)
# ===================================

class ExploreExploitPolicy:
    """
    One round-robin exploration probe plus two exploitation probes per step.

    The exploitation pair is the top two arms by m + eps * V (rank="ucb") or by
    sample mean alone (rank="mean"). Only the exploration observation feeds
    the statistics, and it is applied at the end of the step.
    """

    name = "explore_exploit"
    k = 3

    def __init__(self, n: int, epsilon: float = DEFAULT_EPSILON, rank: str = "ucb"):
        if n < 1:
            raise ParameterError(f"Need at least one arm\n  Got: n={n}")
        if rank not in RANKINGS:
            raise ParameterError(f"Unknown ranking '{rank}'\nAvailable: {', '.join(RANKINGS)}")
        if epsilon < 0:
            raise ParameterError(f"epsilon must be >= 0\n  Got: {epsilon}")
        self.n = n
        self.epsilon = epsilon if rank == "ucb" else 0.0
        self.rank = rank
        self.stats = RunningStats(n)

    def exploit_pair(self) -> Tuple[int, ...]:
        index = allprobe_indices(self.stats.means(), self.stats.variances(),
                                 self.stats.counts, self.epsilon)
        order = np.argsort(-index, kind="stable")
        return tuple(sorted(int(i) for i in order[:2]))

    def step(self, t: int, oracle: ProbeOracle) -> BanditStep:
        explore = (t - 1) % self.n
        exploit = self.exploit_pair()
        probed = tuple(sorted(set(exploit) | {explore}))
        feedback = oracle.all(probed)
        values = dict(zip(feedback.probed, feedback.values))
        played = _best_of(exploit, values)
        reward = oracle.play(played)
        self.stats.update(explore, values[explore])
        return BanditStep(probed=probed, exploit=exploit, feedback=feedback,
                          played=played, reward=reward)


class Ucb1TopTwoPolicy:
    """
    Baseline: AllProbe the two arms with the highest UCB1 index and play the
    better one. Both observations update the arm statistics.
    """

    name = "ucb1_top_two"
    k = 2

    def __init__(self, n: int):
        if n < 1:
            raise ParameterError(f"Need at least one arm\n  Got: n={n}")
        self.n = n
        self.stats = RunningStats(n)

    def step(self, t: int, oracle: ProbeOracle) -> BanditStep:
        counts = self.stats.counts
        bonus = np.sqrt(2.0 * math.log(t) / np.maximum(counts, 1))
        index = np.where(counts > 0, np.nan_to_num(self.stats.means()) + bonus, np.inf)
        exploit = tuple(sorted(int(i) for i in np.argsort(-index, kind="stable")[:2]))
        feedback = oracle.all(exploit)
        values = dict(zip(feedback.probed, feedback.values))
        played = _best_of(exploit, values)
        reward = oracle.play(played)
        for arm in exploit:
            self.stats.update(arm, values[arm])
        return BanditStep(probed=exploit, exploit=exploit, feedback=feedback,
                          played=played, reward=reward)


# ===================================
# CORRELATION EXPLOITATION (k = 4, AllProbe)
# ===================================

class GainMatrix:
    """
    Running estimates of G_ji = E[(X_j - X_i)_+] for ordered pairs and of the
    arm means, fed by joint observations of pairs.

    Entry (j, i) is stored at flat index j * n + i; the diagonal is never
    updated and reads as NaN.
    """

    def __init__(self, n: int):
        self.n = n
        self.gains = RunningStats(n * n)
        self.arms = RunningStats(n)

    def update(self, i: int, j: int, xi: float, xj: float) -> None:
        n = self.n
        self.gains.update(j * n + i, max(xj - xi, 0.0))
        self.gains.update(i * n + j, max(xi - xj, 0.0))
        self.arms.update(i, xi)
        self.arms.update(j, xj)

    def gain(self, j: int, i: int) -> float:
        return float(self.gains.means()[j * self.n + i])

    def matrix(self) -> np.ndarray:
        """G[j, i] = estimated gain of adding j alongside i."""
        return self.gains.means().reshape(self.n, self.n)

    def pair_count(self, i: int, j: int) -> int:
        return int(self.gains.counts[j * self.n + i])

    def mean_estimates(self) -> np.ndarray:
        return self.arms.means()


class CorrelationPolicy:
    """
    Correlation exploitation.

    Explore: AllProbe the next pair in the lexicographic cycle.
    Exploit: the primary arm has the best estimated mean; its partner is the
    arm j maximising the estimated gain G_j,primary. The better of the two
    is played. Never-observed estimates count as +inf so every arm and pair
    gets looked at.
    """

    name = "correlation"
    k = 4

    def __init__(self, n: int):
        if n < 2:
            raise ParameterError(f"Correlation exploitation needs n >= 2 arms\n  Got: n={n}")
        self.n = n
        self.pairs = _pairs(n)
        self.gains = GainMatrix(n)
        self.primary_history: List[int] = []

    def exploit_pair(self) -> Tuple[int, int]:
        means = _unseen_as_inf(self.gains.mean_estimates())
        primary = int(np.argmax(means))
        column = _unseen_as_inf(self.gains.matrix()[:, primary])
        column[primary] = -np.inf
        partner = int(np.argmax(column))
        return primary, partner

    def step(self, t: int, oracle: ProbeOracle) -> BanditStep:
        explore = self.pairs[(t - 1) % len(self.pairs)]
        primary, partner = self.exploit_pair()
        exploit = tuple(sorted((primary, partner)))
        probed = tuple(sorted(set(explore) | set(exploit)))
        feedback = oracle.all(probed)
        values = dict(zip(feedback.probed, feedback.values))
        played = _best_of(exploit, values)
        reward = oracle.play(played)
        i, j = explore
        self.gains.update(i, j, values[i], values[j])
        self.primary_history.append(primary)
        return BanditStep(probed=probed, exploit=exploit, feedback=feedback,
                          played=played, reward=reward)


BANDIT_POLICIES = {
    "meta_ucbv": MetaUcbVPolicy,
    "explore_exploit": ExploreExploitPolicy,
    "correlation": CorrelationPolicy,
    "ucb1_top_two": Ucb1TopTwoPolicy,
}
