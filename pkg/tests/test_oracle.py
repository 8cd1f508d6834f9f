"""Tests for the exact discrete-distribution oracle and the tail-bound helpers."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probe_lab.core import EXACT_SLACK, ParameterError, UndefinedRatioError
from probe_lab.env import tight_instance
from probe_lab.oracle import (
    DiscreteDistribution,
    JointDistribution,
    check_max_gain_identity,
    chernoff_bound,
    correlation_check_time,
    correlation_error_bound,
    dp_ratio,
    expect,
    expect_max,
    expect_max_bruteforce,
    expect_max_many,
    expect_min_two_iid,
    expect_min_two_iid_bruteforce,
    expect_mixed_min,
    gain_exact,
    hedge_domination_gap,
    hedge_dp_ratio,
    meta_stats,
    random_distribution,
    random_dp_pair,
    random_joint,
    tail_bound,
    tail_violation_rate,
    variance,
)

BER_HALF = DiscreteDistribution.bernoulli(0.5)
UNIFORM_01 = DiscreteDistribution.uniform([0.0, 1.0])
THIRDS = DiscreteDistribution.uniform([1.0 / 3.0, 2.0 / 3.0])


class TestDiscreteDistribution:
    def test_duplicates_are_merged(self):
        d = DiscreteDistribution.from_pairs([0.2, 0.2, 0.5], [0.25, 0.25, 0.5])
        np.testing.assert_allclose(d.values, [0.2, 0.5])
        np.testing.assert_allclose(d.probs, [0.5, 0.5])

    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(ParameterError):
            DiscreteDistribution(np.array([0.0, 1.0]), np.array([0.5, 0.6]))

    def test_negative_mass_rejected(self):
        with pytest.raises(ParameterError):
            DiscreteDistribution(np.array([0.0, 1.0]), np.array([1.5, -0.5]))

    def test_cdf_and_survival(self):
        assert BER_HALF.cdf(0.0) == pytest.approx(0.5)
        assert BER_HALF.survival(1.0) == pytest.approx(0.5)
        assert BER_HALF.cdf(-1.0) == 0.0
        assert BER_HALF.mass_at(0.3) == 0.0

    def test_zero_mass_atoms_are_not_support(self):
        d = DiscreteDistribution(np.array([0.0, 0.5, 1.0]), np.array([0.5, 0.0, 0.5]))
        np.testing.assert_array_equal(d.support, [0.0, 1.0])

    def test_sampling_never_returns_zero_mass_values(self, rng):
        d = DiscreteDistribution(np.array([0.0, 0.5, 1.0]), np.array([0.5, 0.5, 0.0]))
        assert set(np.unique(d.sample(rng, size=10_000))) <= {0.0, 0.5}

    def test_joint_marginals(self):
        joint = JointDistribution.independent([BER_HALF, THIRDS])
        assert joint.n_coords == 2
        assert expect(joint.marginal(1)) == pytest.approx(0.5)
        assert expect(joint.project(1, 0).marginal(0)) == pytest.approx(0.5)


class TestMoments:
    @pytest.mark.parametrize("dist,mean,var", [
        (DiscreteDistribution.point_mass(0.7), 0.7, 0.0),
        (BER_HALF, 0.5, 0.25),
        (THIRDS, 0.5, 1.0 / 36.0),
    ])
    def test_mean_and_variance(self, dist, mean, var):
        assert expect(dist) == pytest.approx(mean, abs=1e-12)
        assert variance(dist) == pytest.approx(var, abs=1e-12)


class TestMinimumOfTwo:
    """E[min(A, B)] for A, B i.i.d. and the mixed-minimum variant."""

    def test_uniform_zero_one(self):
        assert expect_min_two_iid(UNIFORM_01) == pytest.approx(0.25)

    def test_point_mass(self):
        assert expect_min_two_iid(DiscreteDistribution.point_mass(0.6)) == pytest.approx(0.6)

    @pytest.mark.parametrize("p,expected", [(0.0, 0.5), (0.5, 0.375), (1.0, 0.25)])
    def test_mixed_min(self, p, expected):
        assert expect_mixed_min(UNIFORM_01, p) == pytest.approx(expected)

    def test_mixed_min_rejects_bad_probability(self):
        with pytest.raises(ParameterError):
            expect_mixed_min(UNIFORM_01, 1.5)

    def test_counterexample_pair(self):
        d, eta = 0.6, 0.2
        first = DiscreteDistribution.point_mass(d)
        second = DiscreteDistribution(np.array([0.0, d]), np.array([eta, 1.0 - eta]))
        assert expect_min_two_iid(first) == pytest.approx(d)
        assert expect(second) == pytest.approx(d * (1.0 - eta))
        with pytest.raises(UndefinedRatioError):
            dp_ratio(first, second)

    def test_agrees_with_enumeration(self, rng):
        for _ in range(200):
            d = random_distribution(rng)
            assert abs(expect_min_two_iid(d) - expect_min_two_iid_bruteforce(d)) <= EXACT_SLACK


class TestPrivacyRatio:
    def test_identical_laws(self):
        assert dp_ratio(THIRDS, THIRDS) == 0.0

    def test_constructed_ratio(self):
        p = math.exp(0.2) / (1.0 + math.exp(0.2))
        first = DiscreteDistribution(np.array([0.0, 1.0]), np.array([p, 1.0 - p]))
        second = DiscreteDistribution(np.array([0.0, 1.0]), np.array([1.0 - p, p]))
        assert dp_ratio(first, second) == pytest.approx(0.2, abs=1e-12)

    def test_support_mismatch(self):
        with pytest.raises(UndefinedRatioError):
            dp_ratio(BER_HALF, THIRDS)

    @pytest.mark.parametrize("eta", [0.1, 0.2, 0.4])
    def test_random_private_pairs_obey_min_of_two(self, rng, eta):
        for _ in range(300):
            d1, d2 = random_dp_pair(rng, eta)
            assert dp_ratio(d1, d2) <= eta
            assert expect_min_two_iid(d1) <= expect(d2) + EXACT_SLACK

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=2, max_value=8), st.sampled_from([0.1, 0.2, 0.4]),
           st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_hedge_update_is_private_and_dominated(self, n, eta, seed):
        local = np.random.default_rng(seed)
        log_w = local.normal(0.0, 2.0, n)
        loss = local.random(n)
        assert hedge_dp_ratio(log_w, loss, eta) <= eta + EXACT_SLACK
        assert hedge_domination_gap(log_w, loss, eta) <= EXACT_SLACK


class TestMaxima:
    def test_two_fair_coins(self):
        assert expect_max(BER_HALF, BER_HALF) == pytest.approx(0.75)
        assert meta_stats(BER_HALF, BER_HALF) == pytest.approx((0.75, 0.1875))

    def test_certain_one(self):
        assert expect_max(THIRDS, DiscreteDistribution.point_mass(1.0)) == pytest.approx(1.0)

    def test_identical_point_masses(self):
        point = DiscreteDistribution.point_mass(0.4)
        assert meta_stats(point, point) == pytest.approx((0.4, 0.0))

    def test_joint_marginals_must_match(self):
        joint = JointDistribution.independent([BER_HALF, BER_HALF])
        with pytest.raises(ParameterError):
            expect_max(BER_HALF, THIRDS, joint)

    def test_tight_instance_pair_max_equals_best_arm(self):
        delta = 0.04
        joint = tight_instance(4, delta).joint
        x, y, z = (joint.marginal(i) for i in range(3))
        assert expect_max(x, y, joint.project(0, 1)) == pytest.approx(0.5 + delta, abs=1e-12)
        assert expect_max(z, y, joint.project(2, 1)) == pytest.approx(0.5 + delta, abs=1e-12)
        assert expect_max_many(joint, (0, 1, 2)) == pytest.approx(0.5 + delta, abs=1e-12)

    def test_agrees_with_enumeration(self, rng):
        for _ in range(200):
            x, y = random_distribution(rng), random_distribution(rng)
            assert abs(expect_max(x, y) - expect_max_bruteforce(x, y)) <= EXACT_SLACK

    def test_lower_bound_through_variance(self, rng):
        for _ in range(300):
            x, y = random_distribution(rng), random_distribution(rng)
            if expect(y) < expect(x):
                x, y = y, x
            assert expect_max(x, y) >= expect(x) + variance(x) / 2.0 - EXACT_SLACK


class TestGains:
    def test_two_fair_coins(self):
        assert gain_exact(BER_HALF, BER_HALF) == pytest.approx(0.25)

    def test_same_coordinate_has_no_gain(self):
        joint = JointDistribution(np.array([[0.2, 0.2], [0.9, 0.9]]), np.array([0.3, 0.7]))
        law = joint.marginal(0)
        assert gain_exact(law, law, joint) == 0.0

    def test_tight_instance_gain_of_best_over_first(self):
        delta = 0.04
        joint = tight_instance(3, delta).joint
        gain = gain_exact(joint.marginal(1), joint.marginal(0), joint.project(1, 0))
        assert gain == pytest.approx(delta, abs=1e-12)

    def test_max_gain_identity_on_random_joints(self, rng):
        for _ in range(100):
            joint = random_joint(rng, 3)
            for i in range(3):
                for j in range(3):
                    if i != j:
                        assert check_max_gain_identity(joint, i, j) <= EXACT_SLACK


class TestTailBounds:
    def test_point_mass_never_violates(self, rng):
        point = DiscreteDistribution.point_mass(0.3)
        for bound_id in ("mean-dev", "var-upper", "var-lower"):
            assert tail_violation_rate(point, 50, bound_id, 1.0, 10_000, rng) == 0.0

    def test_closed_forms(self):
        assert tail_bound(BER_HALF, 200, "mean-dev", 1.0) == pytest.approx(3.0 * math.exp(-50.0 / 23.0))
        assert tail_bound(BER_HALF, 2000, "var-lower") == pytest.approx(3.0 * math.exp(-5.0))

    def test_small_q_rejected(self):
        with pytest.raises(ParameterError):
            tail_bound(BER_HALF, 200, "var-upper", 0.01)

    def test_too_few_trials_rejected(self, rng):
        with pytest.raises(ParameterError):
            tail_violation_rate(BER_HALF, 200, "mean-dev", 1.0, 100, rng)

    def test_mean_deviation_within_bound(self, rng):
        bound = tail_bound(BER_HALF, 200, "mean-dev", 1.0)
        rate = tail_violation_rate(BER_HALF, 200, "mean-dev", 1.0, 10_000, rng)
        assert rate <= bound + 3.0 * math.sqrt(bound * (1.0 - bound) / 10_000)

    @pytest.mark.parametrize("mu,delta,regime,expected", [
        (5.0, 0.0, "small", 1.0),
        (12.0, 0.5, "small", math.exp(-1.0)),
        (3.0, 2.0, "large", math.exp(-2.0)),
    ])
    def test_chernoff(self, mu, delta, regime, expected):
        assert chernoff_bound(mu, delta, regime) == pytest.approx(expected)

    @pytest.mark.parametrize("delta,regime", [(1.5, "small"), (0.5, "large"), (0.5, "medium")])
    def test_chernoff_regime_mismatch(self, delta, regime):
        with pytest.raises(ParameterError):
            chernoff_bound(10.0, delta, regime)

    def test_correlation_check_time_reaches_one_percent(self):
        n, delta = 6, 0.1
        t = correlation_check_time(n, delta)
        assert correlation_error_bound(t, delta, n) <= 0.01 + 1e-12
        assert correlation_error_bound(t - 1, delta, n) > 0.01 - 1e-4
