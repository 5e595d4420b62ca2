import unittest
from dataclasses import replace

import numpy as np

from src.approximator import Network, init_params, policy_architecture
from src.checkpoint import PolicyCheckpoint, to_bytes
from src.dynamics import ModelParams, Setting
from src.sac import act_greedy
from src.snes import (
    SearchDistribution,
    SnesConfig,
    evolve,
    finetune,
    noisy_rollout_action,
    sample_population,
    snes_update,
    utilities,
)


def sphere(generation, candidates):
    return [-float(np.sum(c ** 2)) for c in candidates]


def mean_reward(traj) -> float:
    return float(np.mean(traj.rewards))


def draws_fitness(samples):
    return [-float(np.sum(z ** 2)) for _, z in samples]


class SearchDistributionTest(unittest.TestCase):
    def test_rejects_non_positive_sigma(self) -> None:
        with self.assertRaises(ValueError):
            SearchDistribution(np.zeros(3), np.zeros(3))
        with self.assertRaises(ValueError):
            SearchDistribution(np.zeros(3), np.array([0.1, np.inf, 0.1]))
        with self.assertRaises(ValueError):
            SearchDistribution(np.zeros(3), np.ones(2))

    def test_config_validation(self) -> None:
        for changes in ({'population_size': 7}, {'population_size': 0}, {'sigma_init': 0.0},
                        {'eta_sigma': -1.0}, {'fitness_repeats': 0}):
            with self.subTest(changes=changes), self.assertRaises(ValueError):
                replace(SnesConfig(), **changes)

    def test_canonical_sigma_rate(self) -> None:
        self.assertAlmostEqual(SnesConfig().sigma_rate(10), (3 + np.log(10)) / (5 * np.sqrt(10)))
        self.assertEqual(SnesConfig(eta_sigma=0.05).sigma_rate(10), 0.05)


class SamplingTest(unittest.TestCase):
    def test_mirrored_pairs(self) -> None:
        dist = SearchDistribution(np.array([1.0, -2.0, 0.5]), np.array([0.1, 0.2, 0.3]))
        samples = sample_population(dist, 10, np.random.default_rng(0))
        self.assertEqual(len(samples), 10)
        for (plus, z_plus), (minus, z_minus) in zip(samples[:5], samples[5:]):
            np.testing.assert_array_equal(z_minus, -z_plus)
            np.testing.assert_allclose((plus + minus) / 2.0, dist.theta, rtol=0, atol=1e-15)
        with self.assertRaises(ValueError):
            sample_population(dist, 9, np.random.default_rng(0))

    def test_sample_variance(self) -> None:
        dist = SearchDistribution(np.zeros(3), np.array([0.5, 1.0, 2.0]))
        candidates = np.stack([c for c, _ in sample_population(dist, 100_000, np.random.default_rng(1))])
        np.testing.assert_allclose(candidates.var(axis=0), dist.sigma ** 2, rtol=0.05)


class UtilityTest(unittest.TestCase):
    def test_shape(self) -> None:
        u = utilities(np.arange(40.0))
        self.assertAlmostEqual(float(np.sum(u)), 0.0, places=12)
        self.assertEqual(int(np.argmax(u)), 39)
        self.assertAlmostEqual(float(u[0]), -1.0 / 40)
        assert np.all(np.diff(u) >= 0)

    def test_ties_share_utility(self) -> None:
        u = utilities([1.0, 3.0, 3.0, 0.0])
        self.assertEqual(u[1], u[2])


class UpdateTest(unittest.TestCase):
    def setUp(self) -> None:
        self.cfg = SnesConfig(population_size=8, sigma_init=0.1)
        self.dist = SearchDistribution.isotropic(np.array([0.5, -0.5, 1.0]), 0.1)
        self.samples = sample_population(self.dist, 8, np.random.default_rng(2))
        self.fitness = np.array(sphere(0, [c for c, _ in self.samples]))

    def test_equal_fitness_leaves_distribution_unchanged(self) -> None:
        self.assertIs(snes_update(self.dist, self.samples, [1.5] * 8, self.cfg), self.dist)

    def test_rank_invariance(self) -> None:
        base = snes_update(self.dist, self.samples, self.fitness, self.cfg)
        for transformed in (3.0 * self.fitness + 7.0, np.exp(self.fitness), np.arctan(self.fitness)):
            other = snes_update(self.dist, self.samples, transformed, self.cfg)
            np.testing.assert_array_equal(other.theta, base.theta)
            np.testing.assert_array_equal(other.sigma, base.sigma)

    def test_symmetric_fitness_keeps_centre(self) -> None:
        updated = snes_update(self.dist, self.samples, draws_fitness(self.samples), self.cfg)
        np.testing.assert_array_equal(updated.theta, self.dist.theta)
        assert not np.array_equal(updated.sigma, self.dist.sigma)

    def test_sigma_stays_positive(self) -> None:
        dist = self.dist
        rng = np.random.default_rng(3)
        cfg = replace(self.cfg, eta_sigma=5.0)
        for _ in range(50):
            samples = sample_population(dist, 8, rng)
            dist = snes_update(dist, samples, sphere(0, [c for c, _ in samples]), cfg)
            assert np.all(dist.sigma > 0)

    def test_non_finite_fitness_ranks_last(self) -> None:
        with_nan = self.fitness.copy()
        worst = int(np.argmin(self.fitness))
        with_nan[worst] = np.nan
        with self.assertLogs('src.snes', level='WARNING'):
            updated = snes_update(self.dist, self.samples, with_nan, self.cfg)
        expected = snes_update(self.dist, self.samples, self.fitness, self.cfg)
        np.testing.assert_array_equal(updated.theta, expected.theta)

    def test_size_mismatch(self) -> None:
        with self.assertRaises(ValueError):
            snes_update(self.dist, self.samples[:6], self.fitness[:6], self.cfg)

    def test_sphere_convergence(self) -> None:
        cfg = SnesConfig(population_size=40, sigma_init=0.1, generations=200)
        dist = SearchDistribution.isotropic(np.full(10, 0.2), cfg.sigma_init)
        result = evolve(dist, sphere, cfg, np.random.default_rng(0))
        self.assertGreater(result.best_fitness, -1e-6)
        best_ever = [record['best_ever_fitness'] for record in result.history]
        self.assertEqual(best_ever, sorted(best_ever))


class NoisyActionTest(unittest.TestCase):
    def setUp(self) -> None:
        self.arch = policy_architecture((4,))

    def test_zero_sigma_is_greedy(self) -> None:
        rng = np.random.default_rng(0)
        policy = Network(self.arch, init_params(self.arch, rng))
        observation = rng.normal(size=6)
        self.assertEqual(noisy_rollout_action(policy, observation, 0.0, rng), act_greedy(policy, observation))

    def test_output_spread_near_zero_action(self) -> None:
        policy = Network(self.arch, np.zeros(self.arch.param_count))
        rng = np.random.default_rng(1)
        actions = np.array([noisy_rollout_action(policy, np.zeros(6), 0.01, rng) for _ in range(100_000)])
        self.assertAlmostEqual(float(actions.std()), 0.01, delta=0.0005)
        assert np.all(np.abs(actions) < 1.0)

    def test_saturated_greedy_action_is_clamped(self) -> None:
        params = np.zeros(self.arch.param_count)
        params[self.arch.final_layer_slice][-2] = 50.0
        policy = Network(self.arch, params)
        self.assertEqual(act_greedy(policy, np.zeros(6)), 1.0)
        rng = np.random.default_rng(2)
        actions = [noisy_rollout_action(policy, np.zeros(6), 0.1, rng) for _ in range(1000)]
        assert all(0.99 < a < 1.0 for a in actions)


class FinetuneTest(unittest.TestCase):
    def setUp(self) -> None:
        arch = policy_architecture((4,))
        self.checkpoint = PolicyCheckpoint(policy_arch=arch,
                                           policy_params=init_params(arch, np.random.default_rng(0)), seed=0)
        self.params = ModelParams.defaults(Setting.PENDUBOT)
        self.cfg = SnesConfig(population_size=4, generations=2, fitness_repeats=1, final_layer_only=True, seed=3)

    def test_zero_generations_is_a_no_op(self) -> None:
        result = finetune(self.checkpoint, self.params, mean_reward, replace(self.cfg, generations=0))
        self.assertIs(result.checkpoint, self.checkpoint)

    def test_finetune_is_deterministic_and_parallel_safe(self) -> None:
        serial = finetune(self.checkpoint, self.params, mean_reward, self.cfg)
        parallel = finetune(self.checkpoint, self.params, mean_reward, self.cfg, workers=2)
        self.assertEqual(to_bytes(serial.checkpoint), to_bytes(parallel.checkpoint))
        self.assertEqual(serial.log, parallel.log)

        generations = [record for record in serial.log if record['kind'] == 'generation']
        self.assertEqual([record['generation'] for record in generations], [1, 2])
        best_ever = [record['best_ever_fitness'] for record in generations]
        self.assertEqual(best_ever, sorted(best_ever))
        assert serial.best_fitness >= serial.baseline_fitness

        evolved = serial.checkpoint.policy_params
        hidden = self.checkpoint.policy_arch.final_layer_slice.start
        np.testing.assert_array_equal(evolved[:hidden], self.checkpoint.policy_params[:hidden])
        self.assertEqual(serial.checkpoint.metadata['stage'], 'snes')
