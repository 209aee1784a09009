"""Unit tests for metrics, the bound evaluators, and the sweep runner."""

import numpy as np
import pytest

from bcts import Agent, SamplerParams, run_online
from bcts.bounds import BoundInputs, theorem1_bound, theorem2_bound
from bcts.config import config_from_dict
from bcts.environments import EnvironmentSpec
from bcts.errors import ParameterError
from bcts.metrics import (
    TrajectoryLog,
    behavioral_error,
    cumulative_average_regret,
    error_curve,
    reference_rewards,
    regret_curve,
)
from bcts.runner import ResultTable, recompute_aggregates, run_experiment


def make_log(rewards, best, violations):
    rewards = np.asarray(rewards, dtype=float)
    return TrajectoryLog(
        arms=np.zeros(len(rewards), dtype=int),
        rewards=rewards,
        best_rewards=np.asarray(best, dtype=float),
        violations=np.asarray(violations, dtype=int),
        horizon=len(rewards),
    )


class TestRegretMetric:
    def test_always_optimal_is_zero(self):
        log = make_log([0.5, 0.8, 0.1], [0.5, 0.8, 0.1], [0, 0, 0])
        for t in range(1, 4):
            assert cumulative_average_regret(log, t) == 0.0

    def test_two_step_hand_case(self):
        log = make_log([0.0, 1.0], [1.0, 1.0], [0, 0])
        assert cumulative_average_regret(log, 2) == 0.5
        assert cumulative_average_regret(log, 1) == 1.0

    def test_cumulative_sum_nondecreasing(self):
        rng = np.random.default_rng(0)
        best = rng.uniform(0.5, 1.0, 50)
        achieved = best - rng.uniform(0, 0.5, 50)
        log = make_log(achieved, best, np.zeros(50, dtype=int))
        sums = [cumulative_average_regret(log, t) * t for t in range(1, 51)]
        assert all(b >= a - 1e-12 for a, b in zip(sums, sums[1:]))
        np.testing.assert_allclose(
            regret_curve(log), [cumulative_average_regret(log, t) for t in range(1, 51)]
        )

    def test_index_errors(self):
        log = make_log([0.5], [0.5], [0])
        with pytest.raises(IndexError):
            cumulative_average_regret(log, 0)
        with pytest.raises(IndexError):
            cumulative_average_regret(log, 2)


class TestBehavioralError:
    def test_violation_free(self):
        log = make_log([0.5] * 4, [0.5] * 4, [0] * 4)
        assert behavioral_error(log, 4) == 0

    def test_hand_counts(self):
        log = make_log([0.5] * 5, [0.5] * 5, [0, 1, 0, 0, 1])
        assert behavioral_error(log, 5) == 2
        assert behavioral_error(log, 1) == 0
        np.testing.assert_array_equal(error_curve(log), [0, 1, 1, 1, 2])

    def test_index_errors(self):
        log = make_log([0.5], [0.5], [0])
        with pytest.raises(IndexError):
            behavioral_error(log, 0)


class TestReferenceRewards:
    def test_single_arm(self):
        env = EnvironmentSpec(
            np.ones((3, 2)), np.array([[0.2], [0.7], [0.4]]), np.ones((3, 1), dtype=int)
        )
        np.testing.assert_array_equal(reference_rewards(env), [0.2, 0.7, 0.4])

    def test_matches_per_step_brute_force(self):
        rng = np.random.default_rng(1)
        rewards = rng.uniform(0, 1, size=(40, 4))
        env = EnvironmentSpec(np.ones((40, 2)), rewards, np.ones((40, 4), dtype=int))
        ref = reference_rewards(env)
        for t in range(40):
            assert ref[t] == max(rewards[t, arm] for arm in range(4))

    def test_dominates_any_agent(self):
        rng = np.random.default_rng(2)
        rewards = rng.uniform(0, 1, size=(30, 3))
        env = EnvironmentSpec(np.ones((30, 2)), rewards, np.ones((30, 3), dtype=int))
        sp = SamplerParams(R=0.1, z=1.0, gamma=0.5, d=2)
        log = run_online(env, Agent.cts(3, sp), 30, 5)
        assert (reference_rewards(env) >= log.rewards - 1e-12).all()
        np.testing.assert_array_equal(reference_rewards(env), log.best_rewards)


class TestTheorem1Bound:
    def test_sigma_one_zeroes_constrained_term(self):
        b = BoundInputs(d=3, z=0.5, gamma=0.1, sigma_online=1.0, T=100,
                        c_max=5.0, mu_star_max=2.0, mu_e_extreme=3.0)
        only_online = BoundInputs(d=3, z=0.5, gamma=0.1, sigma_online=1.0, T=100,
                                  c_max=0.0, mu_star_max=0.0, mu_e_extreme=0.0)
        assert theorem1_bound(b) == theorem1_bound(only_online)

    def test_sigma_zero_zeroes_online_term(self):
        b = BoundInputs(d=3, z=0.5, gamma=0.1, sigma_online=0.0, T=100,
                        c_max=1.5, mu_star_max=0.7, mu_e_extreme=1.3)
        assert theorem1_bound(b) == 1.5 * 100 * (0.7 + 1.3)

    def test_spec_tuple(self):
        b = BoundInputs(d=2, z=0.5, gamma=0.1, sigma_online=0.5, T=100,
                        c_max=1.0, mu_star_max=1.0, mu_e_extreme=1.0)
        assert theorem1_bound(b) == pytest.approx(234.12859161003824, rel=1e-9)

    def test_monotone_in_horizon(self):
        values = [
            theorem1_bound(
                BoundInputs(d=4, z=0.7, gamma=0.2, sigma_online=0.6, T=T)
            )
            for T in (1, 2, 5, 10, 100, 1000, 10000)
        ]
        assert values == sorted(values)

    def test_nonpositive_horizon(self):
        with pytest.raises(ParameterError):
            theorem1_bound(BoundInputs(d=2, z=0.5, gamma=0.1, sigma_online=0.5, T=0))


class TestTheorem2Bound:
    def test_degenerate_equal_weights(self):
        b = BoundInputs(d=2, z=0.5, gamma=0.1, sigma_online=1.0, sigma_star=1.0,
                        T=50, N=10)
        rate_T = theorem2_bound(
            BoundInputs(d=2, z=0.5, gamma=0.1, sigma_online=1.0, sigma_star=1.0,
                        T=50, N=999999)
        )
        assert theorem2_bound(b) == rate_T  # teaching term weight is exactly 0

    def test_equal_sigmas_use_plain_weights(self):
        b = BoundInputs(d=3, z=0.4, gamma=0.2, sigma_online=0.3, sigma_star=0.3,
                        T=100, N=50)
        online = 0.3 * (3 * 0.2 / 0.4) * np.sqrt(100**1.4) * (np.log(100) * 3) * np.log(5)
        teach = 0.7 * (3 * 0.2 / 0.4) * np.sqrt(50**1.4) * (np.log(50) * 3) * np.log(5)
        assert theorem2_bound(b) == pytest.approx(online + teach, rel=1e-12)

    def test_monotone_in_horizon_and_budget(self):
        for field in ("T", "N"):
            values = []
            for h in (1, 3, 10, 50, 500):
                kwargs = dict(d=2, z=0.5, gamma=0.1, sigma_online=0.5,
                              sigma_star=0.25, T=100, N=100)
                kwargs[field] = h
                values.append(theorem2_bound(BoundInputs(**kwargs)))
            assert values == sorted(values)

    def test_requires_positive_budget(self):
        with pytest.raises(ParameterError):
            theorem2_bound(
                BoundInputs(d=2, z=0.5, gamma=0.1, sigma_online=0.5, T=10, N=0)
            )


class TestBoundCeilingOnEmpiricalRegret:
    def test_cts_regret_under_theorem1_ceiling(self):
        """Cumulative regret stays below the sigma=1 bound for t in [2, T]
        on at least 95% of seeded runs. The bound is exactly 0 at t=1
        (ln 1 = 0), so the comparison starts at t=2."""
        d, n_arms, T = 3, 3, 150
        sp = SamplerParams(R=1.0, z=0.5, gamma=0.1, d=d)
        ceiling = np.array(
            [
                theorem1_bound(
                    BoundInputs(d=d, z=0.5, gamma=0.1, sigma_online=1.0, T=t)
                )
                for t in range(2, T + 1)
            ]
        )
        ok = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            contexts = rng.uniform(0, 1, size=(T, d))
            weights = rng.uniform(0, 1, size=(n_arms, d))
            rewards = np.clip(contexts @ weights.T / d, 0, 1)
            env = EnvironmentSpec(contexts, rewards, np.ones((T, n_arms), dtype=int))
            log = run_online(env, Agent.cts(n_arms, sp), T, 1000 + seed)
            cum = np.cumsum(log.best_rewards - log.rewards)[1:]
            if (cum <= ceiling).all():
                ok += 1
        assert ok >= 19


def small_config(**overrides):
    raw = {
        "scenario": "movie",
        "horizon": 120,
        "teaching_budgets": [300],
        "teaching_methods": ["random"],
        "sigma_grid": [0.0, 1.0],
        "n_folds": 2,
        "train_size": 40,
        "seeds": [0],
        "sampler": {"R": 0.05, "z": 1.0, "gamma": 0.5},
        "movie": {"n_users": 8, "n_movies": 200},
    }
    raw.update(overrides)
    return config_from_dict(raw)


class TestRunExperiment:
    def test_singleton_grid_rows(self):
        cfg = small_config(sigma_grid=[0.5], n_folds=1, movie={"n_users": 6, "n_movies": 100})
        result = run_experiment(cfg, master_seed=1)
        bcts_rows = [r for r in result.table.rows if r.sigma is not None]
        assert len(bcts_rows) == 1
        agg = [r for r in result.table.aggregates if r.sigma is not None and r.fold == "AGG"]
        assert len(agg) == 1
        assert agg[0].R_T == bcts_rows[0].R_T

    def test_aggregates_are_exact_means(self):
        cfg = small_config(seeds=[0, 1])
        result = run_experiment(cfg, master_seed=2)
        for agg in result.table.aggregates:
            if agg.fold != "AGG":
                continue
            members = [
                r
                for r in result.table.rows
                if (r.method, r.N, r.sigma) == (agg.method, agg.N, agg.sigma)
            ]
            assert agg.R_T == pytest.approx(np.mean([r.R_T for r in members]), abs=1e-12)
            assert agg.E_T == pytest.approx(np.mean([r.E_T for r in members]), abs=1e-12)

    def test_deterministic_and_parallel_agnostic(self, tmp_path):
        cfg = small_config()
        a = run_experiment(cfg, master_seed=3)
        b = run_experiment(cfg, master_seed=3)
        c = run_experiment(cfg, master_seed=3, parallel=4)
        path_a, path_b, path_c = (tmp_path / f"{n}.csv" for n in "abc")
        a.table.to_csv(path_a)
        b.table.to_csv(path_b)
        c.table.to_csv(path_c)
        assert path_a.read_bytes() == path_b.read_bytes() == path_c.read_bytes()

    def test_context_stream_pinned_across_grid(self):
        cfg = small_config(sigma_grid=[0.0, 0.5, 1.0])
        result = run_experiment(cfg, master_seed=4)
        by_fold = {}
        for label, log in result.trajectories.items():
            fold = label.split("_fold")[1].split("_")[0]
            by_fold.setdefault(fold, set()).add(log.context_digest)
        for digests in by_fold.values():
            assert len(digests) == 1

    def test_preloaded_policy_skips_grid(self, tmp_path):
        from bcts.agents import learn_constraints, save_policy
        from bcts.runner import build_base_env
        from bcts.environments import split_folds
        from bcts.rng import FOLDS, substream

        cfg = small_config(teaching_budgets=[100, 300])
        env = build_base_env(cfg, 5)
        folds = split_folds(env.n_steps, cfg.n_folds, cfg.train_size, substream(5, FOLDS))
        sp = SamplerParams(R=0.05, z=1.0, gamma=0.5, d=env.d)
        policy = learn_constraints(env.subset(folds[0][0]), 77, "random", sp, 6)
        path = tmp_path / "policy.json"
        save_policy(policy, path)

        cfg.policy_path = str(path)
        result = run_experiment(cfg, master_seed=5)
        budgets = {r.N for r in result.table.rows if r.sigma is not None}
        assert budgets == {77}
        assert path.read_text()  # untouched and still parseable

    def test_csv_round_trip(self, tmp_path):
        cfg = small_config()
        result = run_experiment(cfg, master_seed=6)
        path = tmp_path / "summary.csv"
        result.table.to_csv(path)
        loaded = ResultTable.from_csv(path)
        assert loaded.rows == result.table.rows
        assert loaded.aggregates == result.table.aggregates
        assert recompute_aggregates(loaded.rows) == loaded.aggregates
