"""Tests for experiment configs, single runs and replication."""

import numpy as np
import pytest
from pydantic import ValidationError

from probe_lab.env import CorruptionSchedule
from probe_lab.harness import (
    POLICY_PROBES,
    CurveAccumulator,
    ExperimentConfig,
    derive_rng,
    derive_seed,
    replicate,
    run_experiment,
)
from probe_lab.lab_config import PRESETS, get_preset


def _bandit(**overrides):
    data = {
        "name": "bandit",
        "policy": {"name": "meta_ucbv"},
        "environment": {"kind": "stochastic",
                        "arms": [{"bernoulli": 0.5}, {"bernoulli": 0.3}, {"bernoulli": 0.2}]},
        "horizon": 200,
        "seed": 7,
        "replications": 3,
    }
    data.update(overrides)
    return ExperimentConfig.from_dict(data)


def _linear(**overrides):
    data = {
        "name": "linear",
        "policy": {"name": "lwc", "params": {"eta": 0.4}},
        "environment": {"kind": "adversarial", "options": "hypercube", "dimension": 3,
                        "generator": "random"},
        "horizon": 150,
        "seed": 2,
        "replications": 4,
    }
    data.update(overrides)
    return ExperimentConfig.from_dict(data)


EXPERTS = {"kind": "adversarial", "options": "simplex", "dimension": 4,
           "generator": "random", "loss_range": "unit"}


class TestExperimentConfig:
    def test_horizon_must_be_positive(self):
        with pytest.raises(ValidationError):
            _bandit(horizon=0)

    def test_unknown_field(self):
        with pytest.raises(ValidationError):
            _bandit(workers=4)

    @pytest.mark.parametrize("policy,environment", [
        ({"name": "meta_ucbv"}, EXPERTS),
        ({"name": "lwc"}, {"kind": "stochastic", "arms": [{"bernoulli": 0.5}]}),
        ({"name": "hwc"}, {"kind": "adversarial", "options": "hypercube", "dimension": 2}),
        ({"name": "cwc"}, EXPERTS),
        ({"name": "correlation"}, {"kind": "stochastic", "arms": [{"bernoulli": 0.5}]}),
    ])
    def test_incompatible_pairs(self, policy, environment):
        with pytest.raises(ValidationError, match="requires|experts|two arms"):
            _bandit(policy=policy, environment=environment)

    def test_explicit_probe_count_must_match(self):
        with pytest.raises(ValidationError, match="k=2"):
            _bandit(policy={"name": "meta_ucbv", "params": {"k": 3}})
        assert _bandit(policy={"name": "meta_ucbv", "params": {"k": 2}}).policy.params.k == 2

    @pytest.mark.parametrize("name", ["btrl", "ftpl", "hedge"])
    def test_baselines_never_probe(self, name):
        assert POLICY_PROBES[name] == 0
        environment = EXPERTS if name == "hedge" else {"kind": "adversarial", "dimension": 3}
        with pytest.raises(ValidationError, match="k=0"):
            _linear(policy={"name": name, "params": {"k": 2}}, environment=environment)

    @pytest.mark.parametrize("arm", [{}, {"bernoulli": 0.5, "values": [0.0], "probs": [1.0]},
                                     {"values": [0.0, 1.0]}])
    def test_arm_forms(self, arm):
        with pytest.raises(ValidationError):
            _bandit(environment={"kind": "stochastic", "arms": [arm]})

    def test_dump_revalidates(self):
        config = _bandit()
        again = ExperimentConfig.model_validate_json(config.model_dump_json())
        assert again.model_dump() == config.model_dump()
        assert again.policy.params.k is None

    @pytest.mark.parametrize("key", sorted(PRESETS))
    def test_presets_validate_and_revalidate(self, key):
        config = ExperimentConfig.from_dict(get_preset(key))
        assert ExperimentConfig.model_validate_json(config.model_dump_json()).model_dump() == config.model_dump()

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            get_preset("nope")

    def test_effective_budget(self):
        corrupted = {"kind": "adversarial", "dimension": 2, "generator": "corrupted-only",
                     "corruption": {"budget": 4}}
        policy = {"name": "lwc_imperfect"}
        assert _linear(policy=policy, environment=corrupted).effective_budget() == 4
        policy = {"name": "lwc_imperfect", "params": {"budget": 2}}
        assert _linear(policy=policy, environment=corrupted).effective_budget() == 2
        assert _linear(policy={"name": "lwc_imperfect"}).effective_budget() == 0

    def test_checkpoint_steps(self):
        config = _linear(horizon=500, checkpoints=[0, 100, 1000, 250])
        assert config.checkpoint_steps() == [100, 250, 500]
        assert _linear(horizon=5000).checkpoint_steps() == [100, 1000, 5000]


class TestSeeds:
    def test_streams_are_independent(self):
        env = derive_rng(1, 0, "env").random(5)
        policy = derive_rng(1, 0, "policy").random(5)
        assert not np.array_equal(env, policy)

    def test_derivation_is_repeatable(self):
        np.testing.assert_array_equal(derive_rng(3, 2, "coin").random(4), derive_rng(3, 2, "coin").random(4))
        assert derive_seed(3, 2, "stream") == derive_seed(3, 2, "stream")
        assert derive_seed(3, 2, "stream") != derive_seed(3, 1, "stream")

    def test_unknown_stream(self):
        with pytest.raises(KeyError):
            derive_rng(0, 0, "weather")


class TestRunExperiment:
    def test_same_replication_same_trace(self):
        config = _bandit()
        first, second = run_experiment(config, 1), run_experiment(config, 1)
        np.testing.assert_array_equal(first.actions, second.actions)
        np.testing.assert_array_equal(first.regret, second.regret)
        assert first.probed == second.probed

    def test_replications_differ(self):
        config = _linear()
        assert not np.array_equal(run_experiment(config, 0).actions, run_experiment(config, 1).actions)

    def test_bandit_pseudo_regret(self):
        trace = run_experiment(_bandit(), 0)
        assert trace.final_regret == pytest.approx(200 * 0.5 - trace.expected.sum())
        for probed, played in zip(trace.probed, trace.actions):
            assert played in probed

    def test_linear_regret_matches_the_stream(self):
        config = _linear()
        trace = run_experiment(config, 0)
        stream = config.environment.build(config.horizon, derive_seed(config.seed, 0, "stream"),
                                          CorruptionSchedule.none())
        np.testing.assert_allclose(trace.realized, np.einsum("td,td->t", trace.actions, stream.losses))
        best = -np.abs(stream.losses.sum(axis=0)).sum()
        assert trace.final_regret == pytest.approx(trace.realized.sum() - best)

    def test_experts_record_indices(self):
        trace = run_experiment(_linear(policy={"name": "hwc"}, environment=EXPERTS), 0)
        assert trace.actions.dtype == np.int64
        assert set(np.unique(trace.actions)) <= set(range(4))

    def test_imperfect_hint_summary(self):
        corrupted = {"kind": "adversarial", "dimension": 2, "generator": "corrupted-only",
                     "corruption": {"budget": 3, "placement": "front"}}
        trace = run_experiment(_linear(policy={"name": "lwc_imperfect"}, environment=corrupted), 0)
        assert trace.summary["corrupted_steps"] == 3
        assert trace.summary["eta"] == pytest.approx(0.1)
        assert trace.extras["corrupted"][3:].sum() == 0

    def test_correlation_records_primary(self):
        config = _bandit(policy={"name": "correlation"},
                         environment={"kind": "stochastic", "tight": {"n": 4, "delta": 0.04}})
        trace = run_experiment(config, 0)
        assert trace.extras["primary"].shape == (200,)

    def test_convex_run(self):
        config = _linear(policy={"name": "cwc", "params": {"eta": 0.4, "beta": 4.0, "gamma": 2.0}},
                         environment={"kind": "convex", "dimension": 2})
        trace = run_experiment(config, 0)
        assert trace.actions.shape == (150, 2)
        assert np.all(np.linalg.norm(trace.actions, axis=1) <= 1.0 + 1e-9)


class TestReplicate:
    def test_single_replication_has_zero_stderr(self):
        report = replicate(_bandit(replications=1), verbose=False)
        assert report.stderr == 0.0
        assert all(row.stderr == 0.0 for row in report.checkpoints)

    def test_worker_count_does_not_change_the_report(self):
        config = _linear()
        serial = replicate(config, workers=1, verbose=False)
        parallel = replicate(config, workers=4, verbose=False)
        assert serial.final_regrets == parallel.final_regrets
        assert serial.curve_mean == parallel.curve_mean

    def test_report_matches_the_traces(self):
        config = _bandit()
        report = replicate(config, verbose=False)
        finals = [run_experiment(config, r).final_regret for r in range(3)]
        assert report.final_regrets == finals
        assert report.mean == pytest.approx(np.mean(finals))
        assert report.stderr == pytest.approx(np.std(finals, ddof=1) / np.sqrt(3))
        assert report.checkpoint(200).mean_regret == pytest.approx(np.mean(finals))

    def test_bounds_are_attached(self):
        report = replicate(_bandit(), verbose=False)
        assert [b.name for b in report.bounds] == ["meta_ucbv_50n2lnT"]
        assert report.bounds[0].holds

    def test_btrl_stays_under_its_noise_bound(self):
        config = _linear(policy={"name": "btrl", "params": {"eta": 0.4}}, horizon=60, replications=200,
                         emit_curve=False)
        report = replicate(config, verbose=False)
        bound = report.bounds[0]
        assert bound.name == "btrl_D_times_E_max_noise"
        # D = 6 on the 3-cube, E[max |x_j|] = 7.5 * (1 + 1/2 + 1/3)
        assert bound.value == pytest.approx(6.0 * 7.5 * (1 + 1 / 2 + 1 / 3))
        assert report.mean <= bound.value + 3.0 * report.stderr

    def test_curve_can_be_skipped(self):
        report = replicate(_bandit(emit_curve=False), verbose=False)
        assert report.curve_t == []


class TestCurveAccumulator:
    def test_merge_equals_sequential(self, rng):
        curves = rng.normal(size=(7, 10))
        whole, left, right = CurveAccumulator(10), CurveAccumulator(10), CurveAccumulator(10)
        for i, curve in enumerate(curves):
            whole.add(curve)
            (left if i < 3 else right).add(curve)
        merged = left.merge(right)
        np.testing.assert_allclose(merged.mean, curves.mean(axis=0))
        np.testing.assert_allclose(merged.stderr(), whole.stderr())
        np.testing.assert_allclose(whole.stderr(), curves.std(axis=0, ddof=1) / np.sqrt(7))
