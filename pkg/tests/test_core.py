"""Tests for samplers, running statistics, option sets and regret accounting."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError
from scipy import stats

from probe_lab.core import (
    AlgoParams,
    DimensionMismatchError,
    EnvironmentContractError,
    OptionSet,
    ParameterError,
    QuadraticFormLoss,
    RunningStats,
    SampleStats,
    Trace,
    argmin_linear,
    laplace_max_abs_mean,
    load_trace,
    merge_stats,
    open_uniform,
    pseudo_regret_mab,
    regret_linear,
    running_regret_linear,
    sample_gamma_vector,
    sample_gumbel,
    sample_laplace,
    save_trace,
    update_stats,
)


def _trace(actions, n_options=1, expected=None, policy="test"):
    actions = np.asarray(actions)
    T = len(actions)
    zeros = np.zeros(T)
    return Trace(policy, T, n_options, [()] * T, [None] * T, actions,
                 zeros, zeros if expected is None else np.asarray(expected, dtype=float), zeros)


def _fold(values):
    acc = SampleStats()
    for v in values:
        acc = update_stats(acc, v)
    return acc


class TestLaplaceSampler:
    """Inverse-CDF Laplace draws."""

    @pytest.mark.parametrize("scale,u,expected", [
        (2.0, 0.5, 0.0),
        (1.0, 0.75, math.log(2.0)),
        (10.0, 0.25, -10.0 * math.log(2.0)),
    ])
    def test_inverse_cdf_values(self, scale, u, expected):
        assert sample_laplace(scale, u) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("scale,u", [
        (1.0, 0.0),
        (1.0, 1.0),
        (0.0, 0.5),
        (-1.0, 0.5),
        (float("nan"), 0.5),
    ])
    def test_rejects_bad_inputs(self, scale, u):
        with pytest.raises(ParameterError):
            sample_laplace(scale, u)

    def test_array_input_keeps_shape(self, rng):
        u = open_uniform(rng, (4, 3))
        assert sample_laplace(1.0, u).shape == (4, 3)

    def test_empirical_cdf_matches(self, rng):
        b = 2.5
        draws = sample_laplace(b, open_uniform(rng, 200_000))
        statistic = stats.kstest(draws, "laplace", args=(0.0, b)).statistic
        assert statistic < 0.005


class TestGumbelSampler:
    """Gumbel(0, 1/eta) draws."""

    @pytest.mark.parametrize("eta,u,expected", [
        (1.0, math.exp(-1.0), 0.0),
        (0.4, 0.5, -math.log(math.log(2.0)) / 0.4),
        (1.0, math.exp(-math.e), -1.0),
    ])
    def test_inverse_cdf_values(self, eta, u, expected):
        assert sample_gumbel(eta, u) == pytest.approx(expected, abs=1e-12)

    def test_median_draw(self):
        # -ln(ln 2) / 0.4 = 0.9162823...
        assert sample_gumbel(0.4, 0.5) == pytest.approx(0.9162823, abs=1e-7)
        assert sample_gumbel(0.4, 0.5) == pytest.approx(-math.log(math.log(2.0)) / 0.4, abs=1e-12)

    def test_empirical_cdf_matches(self, rng):
        eta = 0.4
        draws = sample_gumbel(eta, open_uniform(rng, 200_000))
        statistic = stats.kstest(draws, "gumbel_r", args=(0.0, 1.0 / eta)).statistic
        assert statistic < 0.005

    def test_rejects_non_positive_rate(self):
        with pytest.raises(ParameterError):
            sample_gumbel(0.0, 0.5)


class TestGammaVector:
    """Density proportional to exp(-eta ||x|| / beta)."""

    def test_mean_norm(self, rng):
        draws = sample_gamma_vector(4, 0.4, 2.0, rng, count=200_000)
        assert draws.shape == (200_000, 4)
        assert np.linalg.norm(draws, axis=1).mean() == pytest.approx(20.0, rel=0.01)

    def test_one_dimension_is_laplace(self, rng):
        draws = sample_gamma_vector(1, 0.5, 1.0, rng, count=200_000)[:, 0]
        statistic = stats.kstest(draws, "laplace", args=(0.0, 2.0)).statistic
        assert statistic < 0.005

    def test_single_draw_is_a_finite_vector(self, rng):
        x = sample_gamma_vector(3, 0.4, 1.0, rng)
        assert x.shape == (3,)
        assert np.all(np.isfinite(x))

    @pytest.mark.parametrize("d,eta,beta", [(0, 0.4, 1.0), (2, 0.0, 1.0), (2, 0.4, -1.0)])
    def test_rejects_bad_parameters(self, rng, d, eta, beta):
        with pytest.raises(ParameterError):
            sample_gamma_vector(d, eta, beta, rng)

    def test_laplace_max_abs_mean(self):
        assert laplace_max_abs_mean(3, 2.0) == pytest.approx(2.0 * (1 + 1 / 2 + 1 / 3))


class TestSampleStats:
    """Welford updates against batch formulas."""

    def test_single_observation(self):
        s = _fold([0.7])
        assert s.count == 1
        assert s.mean == pytest.approx(0.7)
        assert s.variance == 0.0

    def test_two_point_sample(self):
        s = _fold([0.0, 1.0])
        assert s.count == 2
        assert s.mean == pytest.approx(0.5)
        assert s.variance == pytest.approx(0.25)

    def test_constant_sequence(self):
        s = _fold([0.2, 0.2, 0.2])
        assert s.mean == pytest.approx(0.2)
        assert s.variance == pytest.approx(0.0, abs=1e-15)

    def test_empty_is_undefined(self):
        assert math.isnan(SampleStats().mean)
        assert math.isnan(SampleStats().variance)

    @pytest.mark.parametrize("value", [-0.1, 1.5, float("nan")])
    def test_out_of_range_observation(self, value):
        with pytest.raises(EnvironmentContractError):
            update_stats(SampleStats(), value)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=300))
    def test_matches_batch_recomputation(self, values):
        s = _fold(values)
        assert s.mean == pytest.approx(np.mean(values), abs=1e-9)
        assert s.variance == pytest.approx(np.var(values), abs=1e-9)

    def test_long_sequence(self, rng):
        values = rng.random(10_000)
        s = _fold(values)
        assert s.mean == pytest.approx(values.mean(), abs=1e-9)
        assert s.variance == pytest.approx(values.var(), abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=0, max_size=50),
           st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=0, max_size=50))
    def test_merge_equals_sequential(self, left, right):
        merged = merge_stats(_fold(left), _fold(right))
        whole = _fold(left + right)
        assert merged.count == whole.count
        if whole.count:
            assert merged.mean == pytest.approx(whole.mean, abs=1e-9)
            assert merged.variance == pytest.approx(whole.variance, abs=1e-9)


class TestRunningStats:
    def test_unseen_entries_are_nan(self):
        table = RunningStats(3)
        table.update(1, 0.7)
        means = table.means()
        assert math.isnan(means[0]) and math.isnan(means[2])
        assert means[1] == pytest.approx(0.7)
        assert table.snapshot(1) == SampleStats(1, 0.7, 0.0)

    def test_variances_follow_updates(self):
        table = RunningStats(2)
        for v in (0.0, 1.0):
            table.update(0, v)
        assert table.variances()[0] == pytest.approx(0.25)
        assert list(table.counts) == [2, 0]


class TestArgminLinear:
    """Linear minimisation over the three option kinds."""

    def test_hypercube_signs(self):
        np.testing.assert_array_equal(argmin_linear(OptionSet.hypercube(2), [1.0, -2.0]), [-1.0, 1.0])

    def test_hypercube_zero_cost_maps_to_minus_one(self):
        np.testing.assert_array_equal(argmin_linear(OptionSet.hypercube(3), [0.0, 0.0, -1.0]), [-1.0, -1.0, 1.0])

    def test_simplex_vertex(self):
        np.testing.assert_array_equal(argmin_linear(OptionSet.simplex(3), [0.3, 0.1, 0.5]), [0.0, 1.0, 0.0])

    def test_simplex_tie_goes_to_lowest_index(self):
        np.testing.assert_array_equal(argmin_linear(OptionSet.simplex(3), [0.2, 0.1, 0.1]), [0.0, 1.0, 0.0])

    def test_explicit_tie_goes_to_first_point(self):
        options = OptionSet.explicit([[0.0, 0.0], [1.0, 1.0]])
        np.testing.assert_array_equal(argmin_linear(options, [0.0, 0.0]), [0.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            argmin_linear(OptionSet.hypercube(2), [1.0, 2.0, 3.0])

    @settings(max_examples=200, deadline=None)
    @given(st.integers(min_value=1, max_value=6).flatmap(
        lambda d: st.lists(st.floats(min_value=-5.0, max_value=5.0), min_size=d, max_size=d)))
    def test_never_beaten_on_hypercube(self, cost):
        options = OptionSet.hypercube(len(cost))
        best = float(np.dot(cost, argmin_linear(options, cost)))
        assert np.all(options.enumerate_points() @ np.asarray(cost) >= best - 1e-12)

    def test_explicit_points_must_fit_the_cube(self):
        with pytest.raises(ParameterError):
            OptionSet.explicit([[0.0, 2.0]])

    def test_diameters(self):
        assert OptionSet.hypercube(3).diameter_l1() == 6.0
        assert OptionSet.simplex(4).diameter_l1() == 2.0
        assert OptionSet.explicit([[0.0, 0.0], [1.0, -1.0]]).diameter_l1() == 2.0


class TestRegretAccounting:
    """Regret and pseudo-regret from a Trace."""

    def test_zero_losses_give_zero_regret(self):
        options = OptionSet.hypercube(2)
        trace = _trace(np.ones((4, 2)))
        assert regret_linear(trace, options, np.zeros((4, 2))) == 0.0

    def test_playing_the_hindsight_optimum(self):
        options = OptionSet.hypercube(2)
        losses = np.tile([0.5, -0.3], (6, 1))
        best = argmin_linear(options, losses.sum(axis=0))
        assert regret_linear(_trace(np.tile(best, (6, 1))), options, losses) == pytest.approx(0.0)

    def test_hand_enumerated_one_dimensional_case(self):
        options = OptionSet.hypercube(1)
        actions = np.array([[1.0], [-1.0], [-1.0], [-1.0], [-1.0]])
        assert regret_linear(_trace(actions), options, np.ones((5, 1))) == pytest.approx(2.0)

    def test_regret_plus_benchmark_equals_played(self, rng):
        options = OptionSet.hypercube(3)
        losses = rng.uniform(-1, 1, size=(50, 3))
        actions = np.where(rng.random((50, 3)) < 0.5, -1.0, 1.0)
        regret = regret_linear(_trace(actions), options, losses)
        benchmark = float(losses.sum(axis=0) @ argmin_linear(options, losses.sum(axis=0)))
        played = float(np.einsum("td,td->", losses, actions))
        assert regret + benchmark == pytest.approx(played, abs=1e-9)

    def test_running_regret_ends_at_total(self, rng):
        options = OptionSet.simplex(4)
        losses = rng.random((30, 4))
        actions = rng.integers(0, 4, size=30)
        curve = running_regret_linear(actions, options, losses)
        trace = _trace(actions, n_options=4)
        assert curve[-1] == pytest.approx(regret_linear(trace, options, losses))

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            regret_linear(_trace(np.ones((3, 2))), OptionSet.hypercube(2), np.ones((4, 2)))

    def test_pseudo_regret_single_arm(self):
        assert pseudo_regret_mab(_trace(np.zeros(5, dtype=int), 1, np.full(5, 0.4)), [0.4]) == pytest.approx(0.0)

    def test_pseudo_regret_always_worst_arm(self):
        trace = _trace(np.ones(10, dtype=int), 2, np.full(10, 0.1))
        assert pseudo_regret_mab(trace, [0.9, 0.1]) == pytest.approx(8.0)

    def test_pseudo_regret_mean_count_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            pseudo_regret_mab(_trace(np.zeros(3, dtype=int), 2), [0.5, 0.4, 0.3])


class TestTrace:
    def test_columns_must_share_the_horizon(self):
        with pytest.raises(DimensionMismatchError):
            Trace("x", 3, 2, [()] * 3, [None] * 2, np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))

    def test_save_and_load(self, tmp_path):
        actions = np.array([[-1.0, 1.0], [1.0, 1.0], [-1.0, -1.0]])
        trace = Trace(
            policy="lwc", horizon=3, n_options=2,
            probed=[((-1.0, 1.0), (1.0, 1.0)), (), ((1.0, 1.0), (-1.0, -1.0))],
            feedback=[0, None, 1],
            actions=actions,
            realized=np.array([0.1, -0.25, 1.0 / 3.0]),
            expected=np.array([0.1, -0.25, 1.0 / 3.0]),
            regret=np.array([0.5, 0.2, 0.1]),
            extras={"followed_hint": np.array([1, 0, 1])},
        )
        loaded = load_trace(save_trace(trace, tmp_path / "trace.csv"), policy="lwc", n_options=2)
        np.testing.assert_array_equal(loaded.actions, actions)
        np.testing.assert_array_equal(loaded.realized, trace.realized)
        np.testing.assert_array_equal(loaded.regret, trace.regret)
        assert loaded.probed == trace.probed
        assert loaded.feedback == [0, None, 1]
        np.testing.assert_array_equal(loaded.extras["followed_hint"], [1, 0, 1])


class TestQuadraticFormLoss:
    def test_centered_loss_vanishes_at_center(self):
        v = np.array([0.2, -0.4])
        loss = QuadraticFormLoss.centered(v)
        assert loss.value(v) == pytest.approx(0.0, abs=1e-15)
        np.testing.assert_allclose(loss.gradient(v), 0.0, atol=1e-15)
        assert loss.value([0.0, 0.0]) == pytest.approx(0.2)

    def test_sum_stays_in_family(self):
        total = QuadraticFormLoss.centered([1.0]) + QuadraticFormLoss.linear_loss([2.0])
        assert total.value([0.5]) == pytest.approx(0.25 + 1.0)

    def test_negative_curvature_rejected(self):
        with pytest.raises(ParameterError):
            QuadraticFormLoss(-1.0, np.zeros(2))


class TestAlgoParams:
    def test_defaults(self):
        params = AlgoParams()
        assert (params.eta, params.epsilon, params.p) == (0.4, 0.1, 1.0)
        assert params.k is None and params.budget is None

    @pytest.mark.parametrize("field,value", [("eta", 0.5), ("eta", 0.0), ("epsilon", 0.0), ("p", 1.5), ("k", 5)])
    def test_out_of_range(self, field, value):
        with pytest.raises(ValidationError):
            AlgoParams(**{field: value})

    def test_unknown_field(self):
        with pytest.raises(ValidationError):
            AlgoParams(temperature=1.0)

    @pytest.mark.parametrize("budget,eta,p", [(0, 0.2, 1.0), (24, 0.04, 0.2)])
    def test_imperfect_hint_schedule(self, budget, eta, p):
        params = AlgoParams.for_imperfect_hints(budget)
        assert params.eta == pytest.approx(eta)
        assert params.p == pytest.approx(p)
