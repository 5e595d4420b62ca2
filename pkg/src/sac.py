"""Soft Actor-Critic with twin critics, Polyak-averaged targets and automatic entropy temperature."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .approximator import (
    OBSERVATION_SIZE,
    TANH_JITTER,
    Activation,
    MlpArchitecture,
    Network,
    featurize,
    gaussian_head,
    init_params,
    log_std_clamped,
    policy_architecture,
    q_architecture,
    sample_squashed,
)
from .checkpoint import PolicyCheckpoint
from .dynamics import ModelParams, State
from .env import SimulationDivergedError, SwingUpEnv
from .optim import Adam
from .replay_buffer import InsufficientBufferError, ReplayBuffer, Transition
from .reward import RewardConfig
from .run_log import JsonLinesWriter
from .scoring import ScoreCriteria, performance_breakdown, run_episode
from .utils import derive_seed, make_rng

logger = logging.getLogger(__name__)


class TrainingDivergedError(ValueError):
    """Raised when a loss or the simulation stops being finite; diagnostics holds the dump."""

    def __init__(self, message: str, diagnostics: Dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class SacConfig:
    gamma: float = 0.99
    ent_alpha: float = 1.0
    auto_entropy: bool = True
    target_entropy: float = -1.0
    polyak_tau: float = 0.005
    lr: float = 1e-3
    batch_size: int = 256
    buffer_capacity: int = 1_000_000
    control_hz: float = 100.0
    total_steps: int = 500_000
    warmup_steps: int = 10_000
    hidden_sizes: Tuple[int, ...] = (256, 256)
    activation: Activation = Activation.RELU
    eval_interval: int = 10_000
    log_interval: int = 1_000
    domain_randomization: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, 'hidden_sizes', tuple(int(size) for size in self.hidden_sizes))
        if not isinstance(self.activation, Activation):
            object.__setattr__(self, 'activation', Activation(self.activation))
        if not 0 < self.gamma < 1:
            raise ValueError('gamma must lie in (0, 1).')
        if not 0 <= self.polyak_tau <= 1:
            raise ValueError('polyak_tau must lie in [0, 1].')
        if self.ent_alpha <= 0 or self.lr <= 0 or self.control_hz <= 0:
            raise ValueError('ent_alpha, lr and control_hz must be positive.')
        for name in ('batch_size', 'buffer_capacity', 'eval_interval', 'log_interval'):
            if getattr(self, name) <= 0:
                raise ValueError(f'{name} must be a positive integer.')
        if self.total_steps < 0 or self.warmup_steps < 0:
            raise ValueError('total_steps and warmup_steps must be non-negative.')
        if self.batch_size > self.buffer_capacity:
            raise ValueError('batch_size cannot exceed buffer_capacity.')

    @property
    def policy_arch(self) -> MlpArchitecture:
        return policy_architecture(self.hidden_sizes, self.activation)

    @property
    def q_arch(self) -> MlpArchitecture:
        return q_architecture(self.hidden_sizes, self.activation)


@dataclass(frozen=True)
class LossReport:
    q1_loss: float
    q2_loss: float
    policy_loss: float
    ent_alpha_loss: float
    mean_entropy: float
    ent_alpha: float

    def is_finite(self) -> bool:
        return all(np.isfinite(value) for value in self.as_dict().values())

    def as_dict(self) -> Dict[str, float]:
        return {
            'q1_loss': self.q1_loss,
            'q2_loss': self.q2_loss,
            'policy_loss': self.policy_loss,
            'ent_alpha_loss': self.ent_alpha_loss,
            'mean_entropy': self.mean_entropy,
            'ent_alpha': self.ent_alpha,
        }


class SacNetworks:
    """Policy, twin critics, their targets, one Adam state per network and the log-temperature."""

    def __init__(self, cfg: SacConfig, rng: np.random.Generator):
        self.policy = Network(cfg.policy_arch, init_params(cfg.policy_arch, rng))
        self.q1 = Network(cfg.q_arch, init_params(cfg.q_arch, rng))
        self.q2 = Network(cfg.q_arch, init_params(cfg.q_arch, rng))
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.log_alpha = np.array([np.log(cfg.ent_alpha)])
        self.policy_opt = Adam(self.policy.params.size, lr=cfg.lr)
        self.q1_opt = Adam(self.q1.params.size, lr=cfg.lr)
        self.q2_opt = Adam(self.q2.params.size, lr=cfg.lr)
        self.alpha_opt = Adam(1, lr=cfg.lr)

    @property
    def ent_alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    def to_checkpoint(self, seed: int, **metadata) -> PolicyCheckpoint:
        return PolicyCheckpoint(
            policy_arch=self.policy.arch,
            policy_params=self.policy.params.copy(),
            q_arch=self.q1.arch,
            q1_params=self.q1.params.copy(),
            q2_params=self.q2.params.copy(),
            seed=seed,
            metadata=metadata,
        )


def _q_inputs(states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    return np.concatenate([states, np.reshape(actions, (-1, 1))], axis=1)


def critic_targets(
    batch: Dict[str, np.ndarray],
    policy: Network,
    target_q1: Network,
    target_q2: Network,
    cfg: SacConfig,
    ent_alpha: float,
    rng: Optional[np.random.Generator],
    noise: Optional[np.ndarray] = None,
) -> np.ndarray:
    """y = r + gamma (1 - terminal) (min(Q1', Q2')(s', a') - alpha log pi(a'|s')), a' ~ pi(.|s')."""
    if not len(batch['rewards']):
        raise InsufficientBufferError('Cannot build critic targets for an empty batch.')

    head = gaussian_head(policy(batch['next_states']))
    _, next_actions, next_log_prob = sample_squashed(head, rng, noise)
    q_in = _q_inputs(batch['next_states'], next_actions)
    next_q = np.minimum(target_q1(q_in)[:, 0], target_q2(q_in)[:, 0])
    bootstrap = cfg.gamma * (1.0 - batch['terminals'])
    return batch['rewards'] + bootstrap * (next_q - ent_alpha * next_log_prob)


def _critic_step(network: Network, optimizer: Adam, q_in: np.ndarray, targets: np.ndarray) -> float:
    errors = network(q_in)[:, 0] - targets
    grad, _ = network.backward(q_in, (2.0 * errors / len(errors))[:, np.newaxis])
    optimizer.step(network.params, grad)
    return float(np.mean(errors ** 2))


def policy_gradient(
    policy: Network,
    q1: Network,
    q2: Network,
    states: np.ndarray,
    alpha: float,
    noise: np.ndarray,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """Loss mean(alpha log pi(a|s) - min(Q1, Q2)(s, a)) for reparameterized actions and its gradient
    with respect to the policy parameters. Returns (loss, grad, log_prob)."""
    batch_size = len(states)
    output = policy(states)
    head = gaussian_head(output)
    _, actions, log_prob = sample_squashed(head, None, noise)

    q_in = _q_inputs(states, actions)
    q1_values = q1(q_in)[:, 0]
    q2_values = q2(q_in)[:, 0]
    use_q1 = q1_values <= q2_values
    min_q = np.where(use_q1, q1_values, q2_values)
    loss = float(np.mean(alpha * log_prob - min_q))

    ones = np.ones((batch_size, 1))
    _, q1_input_grad = q1.backward(q_in, ones)
    _, q2_input_grad = q2.backward(q_in, ones)
    dq_da = np.where(use_q1, q1_input_grad[:, -1], q2_input_grad[:, -1])

    a = actions[:, 0]
    sigma = head.std[:, 0]
    eps = np.asarray(noise, dtype=np.float64)[:, 0]
    squash_grad = 1.0 - a ** 2
    dlogp_du = 2.0 * a * squash_grad / (squash_grad + TANH_JITTER)
    grad_mean = alpha * dlogp_du - dq_da * squash_grad
    grad_log_std = alpha * (-1.0 + dlogp_du * sigma * eps) - dq_da * squash_grad * sigma * eps
    grad_log_std = np.where(log_std_clamped(output)[:, 0], 0.0, grad_log_std)

    upstream = np.stack([grad_mean, grad_log_std], axis=1) / batch_size
    grad, _ = policy.backward(states, upstream)
    return loss, grad, log_prob


def _policy_step(networks: SacNetworks, states: np.ndarray, alpha: float, rng: np.random.Generator):
    noise = rng.standard_normal((len(states), 1))
    loss, grad, log_prob = policy_gradient(networks.policy, networks.q1, networks.q2, states, alpha, noise)
    networks.policy_opt.step(networks.policy.params, grad)
    return loss, log_prob


def _polyak(target: Network, online: Network, tau: float) -> None:
    target.params[:] = (1.0 - tau) * target.params + tau * online.params


def update_step(buffer: ReplayBuffer, networks: SacNetworks, cfg: SacConfig, rng: np.random.Generator) -> LossReport:
    """One critic step on both Q-networks, one policy step, one temperature step, then the target update."""
    batch = buffer.sample(cfg.batch_size, rng)
    alpha = networks.ent_alpha

    targets = critic_targets(batch, networks.policy, networks.q1_target, networks.q2_target, cfg, alpha, rng)
    q_in = _q_inputs(batch['states'], batch['actions'])
    q1_loss = _critic_step(networks.q1, networks.q1_opt, q_in, targets)
    q2_loss = _critic_step(networks.q2, networks.q2_opt, q_in, targets)

    policy_loss, log_prob = _policy_step(networks, batch['states'], alpha, rng)

    entropy_gap = log_prob + cfg.target_entropy
    ent_alpha_loss = float(-np.mean(networks.log_alpha[0] * entropy_gap))
    if cfg.auto_entropy:
        networks.alpha_opt.step(networks.log_alpha, np.array([-np.mean(entropy_gap)]))

    _polyak(networks.q1_target, networks.q1, cfg.polyak_tau)
    _polyak(networks.q2_target, networks.q2, cfg.polyak_tau)

    return LossReport(
        q1_loss=q1_loss,
        q2_loss=q2_loss,
        policy_loss=policy_loss,
        ent_alpha_loss=ent_alpha_loss,
        mean_entropy=float(-np.mean(log_prob)),
        ent_alpha=networks.ent_alpha,
    )


def act_greedy(policy: Network, observation: np.ndarray) -> float:
    """tanh of the policy mean."""
    head = gaussian_head(policy(observation))
    return float(np.tanh(head.mean[0]))


class PolicyController:
    """Greedy controller over a policy network, queried with (possibly perturbed) plant states."""

    def __init__(self, arch: MlpArchitecture, params: np.ndarray):
        self.policy = Network(arch, params)

    def __call__(self, state: State) -> float:
        return act_greedy(self.policy, featurize(state))


class GreedyControllerFactory:
    """Picklable seed -> controller factory for evaluation workers."""

    def __init__(self, arch: MlpArchitecture, params: np.ndarray):
        self.arch = arch
        self.params = np.array(params, dtype=np.float64)

    def __call__(self, seed: int) -> PolicyController:
        return PolicyController(self.arch, self.params)


@dataclass
class TrainingResult:
    checkpoint: PolicyCheckpoint
    best_checkpoint: PolicyCheckpoint
    best_eval: Dict
    log: List[Dict] = field(default_factory=list)


def _evaluate_greedy(networks: SacNetworks, params: ModelParams, reward_cfg: RewardConfig,
                     criteria: ScoreCriteria, seed: int) -> Dict:
    controller = PolicyController(networks.policy.arch, networks.policy.params.copy())
    traj = run_episode(controller, params, seed=seed, reward_cfg=reward_cfg)
    breakdown = performance_breakdown(traj, criteria)
    return {
        'score': breakdown['score'],
        'success': breakdown['success'],
        'mean_reward': float(np.mean(traj.rewards[1:])) if len(traj) > 1 else 0.0,
    }


def _diagnostics(step: int, networks: SacNetworks, report: Optional[LossReport], episode: int) -> Dict:
    return {
        'step': step,
        'episode': episode,
        'losses': report.as_dict() if report else None,
        'ent_alpha': networks.ent_alpha,
        'policy_params_finite': bool(np.all(np.isfinite(networks.policy.params))),
        'q1_params_finite': bool(np.all(np.isfinite(networks.q1.params))),
        'q2_params_finite': bool(np.all(np.isfinite(networks.q2.params))),
    }


def train(
    env_factory: Callable[[], SwingUpEnv],
    reward_cfg: RewardConfig,
    model_params: ModelParams,
    sac_cfg: SacConfig,
    seed: int,
    criteria: Optional[ScoreCriteria] = None,
    log_writer: Optional[JsonLinesWriter] = None,
) -> TrainingResult:
    """Train at the environment's control rate and keep the best greedy policy evaluated at 500 Hz.

    Every random stream is derived from the seed, so equal seeds give identical logs and checkpoints.
    """
    criteria = criteria or ScoreCriteria.defaults(model_params.setting)
    log_writer = log_writer or JsonLinesWriter()
    networks = SacNetworks(sac_cfg, make_rng(seed, 0))
    action_rng = make_rng(seed, 1)
    update_rng = make_rng(seed, 2)
    env_rng = make_rng(seed, 3)

    env = env_factory()
    buffer = ReplayBuffer(sac_cfg.buffer_capacity, OBSERVATION_SIZE)
    observation = env.reset(env_rng)
    episode, episode_return = 0, 0.0
    report: Optional[LossReport] = None
    best_key: Optional[Tuple[float, float]] = None
    best_eval: Dict = {}
    best_checkpoint = networks.to_checkpoint(seed, stage='sac', step=0)

    for step in range(1, sac_cfg.total_steps + 1):
        if step <= sac_cfg.warmup_steps:
            action = float(action_rng.uniform(-1.0, 1.0))
        else:
            head = gaussian_head(networks.policy(observation))
            _, squashed, _ = sample_squashed(head, action_rng)
            action = float(squashed[0])

        try:
            next_observation, reward, done, _ = env.step(action)
        except SimulationDivergedError as ex:
            raise TrainingDivergedError(str(ex), _diagnostics(step, networks, report, episode)) from ex
        buffer.push(Transition(observation, action, reward, next_observation, done))
        episode_return += reward
        observation = next_observation

        if done:
            log_writer.write({'kind': 'episode', 'step': step, 'episode': episode, 'return': episode_return})
            episode += 1
            episode_return = 0.0
            observation = env.reset(env_rng)

        if step > sac_cfg.warmup_steps and len(buffer) >= sac_cfg.batch_size:
            report = update_step(buffer, networks, sac_cfg, update_rng)
            if not report.is_finite():
                diagnostics = _diagnostics(step, networks, report, episode)
                logger.error('Non-finite SAC loss at step %d: %s', step, diagnostics)
                raise TrainingDivergedError(f'Non-finite loss at step {step}.', diagnostics)

        if report is not None and step % sac_cfg.log_interval == 0:
            log_writer.write({'kind': 'update', 'step': step, **report.as_dict()})

        if step % sac_cfg.eval_interval == 0 or step == sac_cfg.total_steps:
            evaluation = _evaluate_greedy(networks, model_params, reward_cfg, criteria, derive_seed(seed, 4, step))
            log_writer.write({'kind': 'eval', 'step': step, **evaluation})
            key = (evaluation['score'], evaluation['mean_reward'])
            if best_key is None or key > best_key:
                best_key = key
                best_eval = dict(evaluation, step=step)
                best_checkpoint = networks.to_checkpoint(seed, stage='sac', step=step, eval_score=evaluation['score'])
            logger.info('step %d: eval score %.3f, mean reward %.3f', step, evaluation['score'],
                        evaluation['mean_reward'])

    final = networks.to_checkpoint(seed, stage='sac', step=sac_cfg.total_steps)
    return TrainingResult(checkpoint=final, best_checkpoint=best_checkpoint, best_eval=best_eval,
                          log=log_writer.records)
