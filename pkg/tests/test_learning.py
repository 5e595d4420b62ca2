"""Slow learning checks. Run with SWINGUP_LONG_TESTS=1."""

import os
import unittest
from dataclasses import replace
from functools import partial

import numpy as np

from definitions import CONFIGS_DIR
from src.approximator import gaussian_head, sample_squashed
from src.config import load_config
from src.dynamics import ModelParams, Setting
from src.env import make_env_factory
from src.metrics import is_successful
from src.perturbations import PerturbationCategory, make_perturbation
from src.replay_buffer import ReplayBuffer, Transition
from src.reward import RewardConfig
from src.sac import GreedyControllerFactory, SacConfig, SacNetworks, train, update_step
from src.scoring import ScoreCriteria, evaluate, performance_score, run_episode
from src.snes import finetune

LONG_TESTS = os.environ.get('SWINGUP_LONG_TESTS') == '1'


def success_count(checkpoint, params: ModelParams, reward_cfg: RewardConfig, criteria: ScoreCriteria,
                  runs: int = 10) -> int:
    """Greedy episodes under tiny velocity noise, one seed each."""
    factory = GreedyControllerFactory(checkpoint.policy_arch, checkpoint.policy_params)
    noise = make_perturbation(PerturbationCategory.VELOCITY_NOISE, 1e-3)
    passed = 0
    for seed in range(runs):
        traj = run_episode(factory(seed), params, noise, seed=seed, reward_cfg=reward_cfg)
        passed += is_successful(traj, criteria.height_threshold, criteria.success_window)
    return passed


@unittest.skipUnless(LONG_TESTS, 'set SWINGUP_LONG_TESTS=1 to run learning tests')
class EntropyTemperatureTest(unittest.TestCase):
    def test_entropy_settles_at_target(self) -> None:
        cfg = SacConfig(hidden_sizes=(32, 32), batch_size=64, buffer_capacity=2048, lr=1e-3)
        rng = np.random.default_rng(0)
        buffer = ReplayBuffer(cfg.buffer_capacity, 6)
        for _ in range(cfg.buffer_capacity):
            state = rng.normal(size=6)
            action = float(rng.uniform(-1.0, 1.0))
            buffer.push(Transition(state, action, -10.0 * (action - 0.3) ** 2, state, True, terminal=True))

        networks = SacNetworks(cfg, np.random.default_rng(1))
        update_rng = np.random.default_rng(2)
        for _ in range(20_000):
            update_step(buffer, networks, cfg, update_rng)

        states = buffer.sample(1024, np.random.default_rng(3))['states']
        _, _, log_prob = sample_squashed(gaussian_head(networks.policy(states)), np.random.default_rng(4))
        entropy = -float(np.mean(log_prob))
        self.assertLess(abs(entropy - cfg.target_entropy), 0.3)


@unittest.skipUnless(LONG_TESTS, 'set SWINGUP_LONG_TESTS=1 to run learning tests')
class SwingUpLearningTest(unittest.TestCase):
    def test_near_single_link_plant(self) -> None:
        base = ModelParams.defaults(Setting.PENDUBOT)
        params = replace(base, m2=0.01, l2=0.05, r2=0.025, I2=0.01 * 0.05 ** 2 / 3.0)
        reward_cfg = replace(RewardConfig.for_setting(Setting.PENDUBOT), y_th=0.25)
        criteria = replace(ScoreCriteria.defaults(Setting.PENDUBOT), height_threshold=0.25)
        cfg = SacConfig(hidden_sizes=(64, 64), total_steps=200_000, warmup_steps=10_000, eval_interval=20_000)

        result = train(make_env_factory(params, reward_cfg, cfg.control_hz), reward_cfg, params, cfg, seed=0,
                       criteria=criteria)
        self.assertGreaterEqual(success_count(result.best_checkpoint, params, reward_cfg, criteria), 7)

    def test_pendubot_then_snes(self) -> None:
        config = load_config(str(CONFIGS_DIR / 'pendubot.json'))
        result = train(make_env_factory(config.model, config.reward, config.sac.control_hz), config.reward,
                       config.model, config.sac, config.run.seed, criteria=config.criteria)
        parent = result.best_checkpoint
        self.assertGreaterEqual(success_count(parent, config.model, config.reward, config.criteria), 7)

        tuned = finetune(parent, config.model, partial(performance_score, criteria=config.criteria),
                         replace(config.snes, generations=10), reward_cfg=config.reward)

        def report(checkpoint):
            factory = GreedyControllerFactory(checkpoint.policy_arch, checkpoint.policy_params)
            return evaluate(factory, config.model, config.criteria, config.reward, specs=config.perturbations)[0]

        before, after = report(parent), report(tuned.checkpoint)
        self.assertGreaterEqual(after.performance, before.performance)
        self.assertGreaterEqual(after.robustness, before.robustness - 0.02)
