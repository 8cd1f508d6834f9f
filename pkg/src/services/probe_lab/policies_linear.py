"""
Online Linear and Convex Policies
=================================
Full-information online learners that may compare two candidate actions
before playing.

Policies:
    LwcPolicy            - two perturbed leaders, play the one the probe says is better
    LwcImperfectPolicy   - same, but follow the (possibly corrupted) hint with probability p
    BtrlPolicy           - be-the-regularized-leader; peeks at l^t, diagnostic only
    FtplPolicy           - single perturbed leader, no probe (baseline)
    HwcPolicy            - Hedge with two sampled experts and a comparison
    HedgePolicy          - plain Hedge (baseline)
    CwcPolicy            - two Gamma-perturbed regularized leaders over a convex set

Probe callables receive the candidate tuple (a, b) and return the position
(0 or 1) of the candidate the oracle reports as better.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from probe_lab.core import (
    MAX_ETA,
    CumulativeLoss,
    NoiseSampler,
    OptionSet,
    ParameterError,
    ProbeContractError,
    QuadraticFormLoss,
    SolverError,
    argmin_linear,
    open_uniform,
    sample_gamma_vector,
    sample_gumbel,
    sample_laplace,
)


Probe = Callable[[tuple], int]

HEDGE_RENORMALIZE_BELOW = -500.0   # shift log-weights once the largest drops under this
CONVEX_DOMAINS = ("ball", "box", "explicit")
HWC_SAMPLERS = ("hedge", "gumbel")


def _check_eta(eta: float) -> float:
    if not 0.0 < eta <= MAX_ETA:
        raise ParameterError(f"eta must lie in (0, {MAX_ETA}]\n  Got: eta={eta!r}")
    return float(eta)


def _ask_probe(probe: Probe, candidates: tuple) -> int:
    position = probe(candidates)
    if position not in (0, 1):
        raise ProbeContractError(
            f"Probe answered {position!r}; it must name one of the two probed candidates (0 or 1)"
        )
    return int(position)


def _same(a, b) -> bool:
    return bool(np.array_equal(a, b))


# ===================================
# FOLLOW THE PERTURBED LEADER FAMILY
# ===================================

@dataclass
class LwcState:
    """Cumulative loss L^{t-1}, the rate eta and the option set."""
    cumulative: CumulativeLoss
    eta: float
    options: OptionSet


class LwcPolicy:
    """
    Two independent Laplace(d/eta)-perturbed leaders, compared by one probe.

    Each step draws fresh x, y, computes a = argmin <L + x, w> and
    b = argmin <L + y, w>, probes {a, b} and plays the winner.

    Usage:
        policy = LwcPolicy(OptionSet.hypercube(3), eta=0.4, rng=rng)
        w = policy.act(t, probe)
        policy.observe(loss)
    """

    name = "lwc"

    def __init__(self, options: OptionSet, eta: float, rng: np.random.Generator,
                 laplace_sampler: NoiseSampler = sample_laplace):
        self.state = LwcState(CumulativeLoss.zeros(options.dimension), _check_eta(eta), options)
        self.rng = rng
        self.sampler = laplace_sampler
        self.last_candidates: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self.last_probed = False

    @property
    def noise_scale(self) -> float:
        return self.state.options.dimension / self.state.eta

    def draw_noise(self) -> np.ndarray:
        return np.asarray(self.sampler(self.noise_scale, open_uniform(self.rng, self.state.options.dimension)))

    def candidates(self) -> Tuple[np.ndarray, np.ndarray]:
        """(a^t, b^t) from two fresh noise vectors; both are always drawn."""
        leader = self.state.cumulative.vector
        x, y = self.draw_noise(), self.draw_noise()
        return (argmin_linear(self.state.options, leader + x),
                argmin_linear(self.state.options, leader + y))

    def _resolve(self, candidates, probe: Probe):
        a, b = candidates
        self.last_candidates = candidates
        if _same(a, b):
            self.last_probed = False
            return a
        self.last_probed = True
        return candidates[_ask_probe(probe, candidates)]

    def act(self, t: int, probe: Probe) -> np.ndarray:
        return self._resolve(self.candidates(), probe)

    def observe(self, loss: np.ndarray) -> None:
        self.state.cumulative.add(loss)


class LwcImperfectPolicy(LwcPolicy):
    """
    LwC for hints of which at most B are wrong.

    eta = 1 / (5 sqrt(B + 1)), p = 5 eta. The probe winner is played with
    probability p and a^t otherwise, decided by one draw per step from the
    dedicated coin stream.
    """

    name = "lwc_imperfect"

    def __init__(self, options: OptionSet, budget: int, rng: np.random.Generator,
                 coin_rng: np.random.Generator, laplace_sampler: NoiseSampler = sample_laplace):
        if budget < 0:
            raise ParameterError(f"Corruption budget must be >= 0\n  Got: {budget}")
        eta = 1.0 / (5.0 * math.sqrt(budget + 1))
        super().__init__(options, eta, rng, laplace_sampler)
        self.budget = budget
        self.p = min(1.0, 5.0 * eta)
        self.coin_rng = coin_rng
        self.hints = 0
        self.mispredictions = 0
        self.followed_hint = False
        self._hint: Optional[np.ndarray] = None

    def act(self, t: int, probe: Probe) -> np.ndarray:
        candidates = self.candidates()
        hinted = self._resolve(candidates, probe)
        self._hint = hinted if self.last_probed else None
        self.followed_hint = bool(self.coin_rng.random() < self.p)
        return hinted if self.followed_hint else candidates[0]

    def observe(self, loss: np.ndarray) -> None:
        loss = np.asarray(loss, dtype=float)
        if self._hint is not None:
            a, b = self.last_candidates
            self.hints += 1
            if float(loss @ self._hint) > min(float(loss @ a), float(loss @ b)):
                self.mispredictions += 1
        super().observe(loss)

    @property
    def hint_accuracy(self) -> float:
        return 1.0 - self.mispredictions / self.hints if self.hints else 1.0


class BtrlPolicy:
    """
    Be-the-regularized-leader: c^t = argmin <L^{t-1} + l^t + x, w> with one x
    drawn at construction. Needs l^t before acting, so it is a yardstick, not
    an online algorithm.
    """

    name = "btrl"

    def __init__(self, options: OptionSet, eta: float, rng: np.random.Generator,
                 stream=None, noise: Optional[np.ndarray] = None,
                 laplace_sampler: NoiseSampler = sample_laplace):
        self.options = options
        self.eta = _check_eta(eta)
        self.stream = stream
        self.cumulative = CumulativeLoss.zeros(options.dimension)
        if noise is None:
            noise = laplace_sampler(options.dimension / self.eta, open_uniform(rng, options.dimension))
        self.noise = np.asarray(noise, dtype=float)

    def step(self, loss: np.ndarray) -> np.ndarray:
        """Play against l^t, then fold it into L."""
        action = argmin_linear(self.options, self.cumulative.vector + loss + self.noise)
        self.cumulative.add(loss)
        return action

    def act(self, t: int, probe: Probe = None) -> np.ndarray:
        return self.step(self.stream.loss_at(t))

    def observe(self, loss: np.ndarray) -> None:
        # act() already folded l^t in
        pass


class FtplPolicy:
    """Follow the perturbed leader with one fresh Laplace(d/eta) draw per step."""

    name = "ftpl"

    def __init__(self, options: OptionSet, eta: float, rng: np.random.Generator,
                 laplace_sampler: NoiseSampler = sample_laplace):
        self.options = options
        self.eta = _check_eta(eta)
        self.rng = rng
        self.sampler = laplace_sampler
        self.cumulative = CumulativeLoss.zeros(options.dimension)

    def act(self, t: int, probe: Probe = None) -> np.ndarray:
        scale = self.options.dimension / self.eta
        x = np.asarray(self.sampler(scale, open_uniform(self.rng, self.options.dimension)))
        return argmin_linear(self.options, self.cumulative.vector + x)

    def observe(self, loss: np.ndarray) -> None:
        self.cumulative.add(loss)


# ===================================
# HEDGE FAMILY
# ===================================

@dataclass(frozen=True)
class HedgeState:
    """Log-weights ln W_i; probabilities come from a max-shifted softmax."""
    log_weights: np.ndarray

    @classmethod
    def uniform(cls, n: int) -> "HedgeState":
        return cls(np.zeros(n))

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_weights - logsumexp(self.log_weights))


def hedge_update(state: HedgeState, loss: np.ndarray, eta: float) -> HedgeState:
    """W_i <- W_i exp(-eta l_i), shifting log-weights when they drift below -500."""
    log_weights = state.log_weights - eta * np.asarray(loss, dtype=float)
    top = float(log_weights.max())
    if top < HEDGE_RENORMALIZE_BELOW:
        log_weights = log_weights - top
    return HedgeState(log_weights)


def _sample_index(probs: np.ndarray, u: float) -> int:
    return int(min(np.searchsorted(np.cumsum(probs), u, side="right"), probs.size - 1))


class HedgePolicy:
    """Plain Hedge: one draw from p^t, no probe."""

    name = "hedge"

    def __init__(self, n: int, eta: float, rng: np.random.Generator):
        self.eta = _check_eta(eta)
        self.rng = rng
        self.state = HedgeState.uniform(n)

    @property
    def n(self) -> int:
        return int(self.state.log_weights.size)

    def draw(self) -> int:
        return _sample_index(self.state.probabilities, float(open_uniform(self.rng)))

    def act(self, t: int, probe: Probe = None) -> int:
        return self.draw()

    def observe(self, loss: np.ndarray) -> None:
        self.state = hedge_update(self.state, loss, self.eta)


class HwcPolicy(HedgePolicy):
    """
    Hedge with Choice: two i.i.d. experts from p^t, probe, play the better.

    sampler="gumbel" draws each expert as argmax(ln W + eta z) with
    z ~ Gumbel(scale 1/eta), which has the same law as sampling p^t.
    """

    name = "hwc"

    def __init__(self, n: int, eta: float, rng: np.random.Generator, sampler: str = "hedge"):
        super().__init__(n, eta, rng)
        if sampler not in HWC_SAMPLERS:
            raise ParameterError(f"Unknown HwC sampler '{sampler}'\nAvailable: {', '.join(HWC_SAMPLERS)}")
        self.sampler = sampler
        self.last_candidates: Optional[Tuple[int, int]] = None
        self.last_probed = False

    def draw(self) -> int:
        if self.sampler == "gumbel":
            z = sample_gumbel(self.eta, open_uniform(self.rng, self.n))
            return int(np.argmax(self.state.log_weights + self.eta * z))
        return super().draw()

    def act(self, t: int, probe: Probe) -> int:
        candidates = (self.draw(), self.draw())
        self.last_candidates = candidates
        if candidates[0] == candidates[1]:
            self.last_probed = False
            return candidates[0]
        self.last_probed = True
        return candidates[_ask_probe(probe, candidates)]


# ===================================
# CONVEX LOSSES
# ===================================

@dataclass(frozen=True, eq=False)
class ConvexProblem:
    """
    Convex decision set with a minimisation routine for quadratic-form objectives.

    kind:
        ball      - Euclidean ball of the given radius
        box       - [-radius, radius]^d
        explicit  - finite point list (minimised by enumeration)

    beta bounds the gradient norm of the losses and gamma their largest
    Hessian eigenvalue.
    """
    kind: str
    dimension: int
    radius: float = 1.0
    points: Optional[np.ndarray] = None
    beta: float = 1.0
    gamma: float = 0.0
    tolerance: float = 1e-8
    max_iter: int = 10_000

    def __post_init__(self):
        if self.kind not in CONVEX_DOMAINS:
            raise ParameterError(f"Unknown convex domain '{self.kind}'\nAvailable: {', '.join(CONVEX_DOMAINS)}")
        if self.dimension < 1 or self.radius <= 0 or self.beta <= 0 or self.gamma < 0:
            raise ParameterError(
                "ConvexProblem needs d >= 1, radius > 0, beta > 0, gamma >= 0\n"
                f"  Got: d={self.dimension}, radius={self.radius}, beta={self.beta}, gamma={self.gamma}"
            )
        if self.kind == "explicit":
            pts = np.array(self.points, dtype=float)
            if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] != self.dimension:
                raise ParameterError(f"Explicit domain needs an (m, {self.dimension}) point list")
            pts.setflags(write=False)
            object.__setattr__(self, "points", pts)

    def project(self, w: np.ndarray) -> np.ndarray:
        point = np.asarray(w, dtype=float)
        if self.kind == "ball":
            norm = float(np.linalg.norm(point))
            return point if norm <= self.radius else point * (self.radius / norm)
        if self.kind == "box":
            return np.clip(point, -self.radius, self.radius)
        raise ParameterError("Projection is not defined for explicit point sets")

    def minimize(self, objective: QuadraticFormLoss) -> np.ndarray:
        """
        argmin of a w'w + <g, w> + c over the domain.

        Raises:
            SolverError: projected gradient did not settle within max_iter
        """
        a, g = objective.curvature, objective.linear
        if self.kind == "explicit":
            values = a * np.einsum("md,md->m", self.points, self.points) + self.points @ g
            return np.array(self.points[int(np.argmin(values))])
        if a == 0.0:
            if self.kind == "box":
                return np.where(g < 0.0, self.radius, -self.radius)
            norm = float(np.linalg.norm(g))
            return np.zeros(self.dimension) if norm == 0.0 else -self.radius * g / norm
        return self._projected_gradient(objective)

    def _projected_gradient(self, objective: QuadraticFormLoss) -> np.ndarray:
        step = 1.0 / (2.0 * objective.curvature)
        w = np.zeros(self.dimension)
        residual = math.inf
        for _ in range(self.max_iter):
            nxt = self.project(w - step * objective.gradient(w))
            residual = float(np.linalg.norm(nxt - w))
            w = nxt
            if residual <= self.tolerance:
                return w
        raise SolverError(
            f"Projected gradient stopped after {self.max_iter} iterations "
            f"with residual {residual:.3e} (tolerance {self.tolerance:.1e})",
            residual,
        )


class CwcPolicy:
    """
    Convex with Choice.

    a = argmin_w L(w) + <x, w> + (gamma/eta) ||w||^2 with x from the Gamma
    vector law (likewise b with y); probe {a, b}, play the winner.
    """

    name = "cwc"

    def __init__(self, problem: ConvexProblem, eta: float, rng: np.random.Generator):
        self.problem = problem
        self.eta = _check_eta(eta)
        self.rng = rng
        self.cumulative = QuadraticFormLoss.zero(problem.dimension)
        self.regularizer = QuadraticFormLoss(problem.gamma / self.eta, np.zeros(problem.dimension))
        self.last_candidates = None
        self.last_probed = False

    def leader(self, noise: np.ndarray) -> np.ndarray:
        objective = self.cumulative + QuadraticFormLoss.linear_loss(noise) + self.regularizer
        return self.problem.minimize(objective)

    def candidates(self) -> Tuple[np.ndarray, np.ndarray]:
        d, beta = self.problem.dimension, self.problem.beta
        x = sample_gamma_vector(d, self.eta, beta, self.rng)
        y = sample_gamma_vector(d, self.eta, beta, self.rng)
        return self.leader(x), self.leader(y)

    def act(self, t: int, probe: Probe) -> np.ndarray:
        candidates = self.candidates()
        self.last_candidates = candidates
        if _same(*candidates):
            self.last_probed = False
            return candidates[0]
        self.last_probed = True
        return candidates[_ask_probe(probe, candidates)]

    def observe(self, loss: QuadraticFormLoss) -> None:
        self.cumulative = self.cumulative + loss
