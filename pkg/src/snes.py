"""Separable Natural Evolution Strategy over flat policy parameters.

The search distribution is a diagonal Gaussian (theta, sigma). Each generation draws mirrored
samples z and -z, ranks the candidates by fitness (higher is better) and moves

    theta <- theta + eta_theta * sigma * sum_k u_k z_k
    sigma <- sigma * exp(eta_sigma / 2 * sum_k u_k (z_k ** 2 - 1))

with rank-based utilities u_k that sum to zero.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .approximator import MlpArchitecture, Network, featurize
from .checkpoint import PolicyCheckpoint
from .dynamics import ModelParams, State
from .reward import RewardConfig
from .run_log import JsonLinesWriter
from .sac import act_greedy
from .scoring import run_episode
from .trajectory import Trajectory
from .utils import derive_seed, make_rng, parallel_map

logger = logging.getLogger(__name__)

PRE_TANH_LIMIT = 10.0

Sample = Tuple[np.ndarray, np.ndarray]
ScoreFn = Callable[[Trajectory], float]


@dataclass(frozen=True)
class SnesConfig:
    population_size: int = 40
    sigma_init: float = 0.01
    eta_theta: float = 1.0
    eta_sigma: Optional[float] = None
    generations: int = 50
    fitness_repeats: int = 3
    action_noise_sigma: float = 0.1
    robustness_noise_sigma: float = 0.01
    final_layer_only: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population_size < 2 or self.population_size % 2:
            raise ValueError('population_size must be an even integer of at least 2.')
        if not self.sigma_init > 0:
            raise ValueError('sigma_init must be positive.')
        if self.eta_theta < 0 or (self.eta_sigma is not None and self.eta_sigma < 0):
            raise ValueError('SNES learning rates must be non-negative.')
        if self.generations < 0:
            raise ValueError('generations must be non-negative.')
        if self.fitness_repeats <= 0:
            raise ValueError('fitness_repeats must be a positive integer.')
        if self.action_noise_sigma < 0 or self.robustness_noise_sigma < 0:
            raise ValueError('Action noise levels must be non-negative.')

    def sigma_rate(self, dimension: int) -> float:
        if self.eta_sigma is not None:
            return self.eta_sigma
        return (3.0 + np.log(dimension)) / (5.0 * np.sqrt(dimension))


@dataclass(frozen=True, eq=False)
class SearchDistribution:
    theta: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=np.float64)
        sigma = np.array(self.sigma, dtype=np.float64)
        if theta.ndim != 1 or theta.shape != sigma.shape:
            raise ValueError(f'theta and sigma must be vectors of equal length, got {theta.shape} and {sigma.shape}.')
        if not np.all(np.isfinite(theta)):
            raise ValueError('Search centre must be finite.')
        if not (np.all(np.isfinite(sigma)) and np.all(sigma > 0)):
            raise ValueError('Step sizes must be finite and strictly positive.')
        object.__setattr__(self, 'theta', theta)
        object.__setattr__(self, 'sigma', sigma)

    @classmethod
    def isotropic(cls, theta: np.ndarray, sigma: float) -> 'SearchDistribution':
        theta = np.asarray(theta, dtype=np.float64)
        return cls(theta, np.full(theta.shape, sigma))

    @property
    def dimension(self) -> int:
        return self.theta.size


def sample_population(dist: SearchDistribution, n: int, rng: np.random.Generator) -> List[Sample]:
    """n mirrored samples: the draws for k and k + n/2 are z and -z."""
    if n < 2 or n % 2:
        raise ValueError('Population size must be an even integer of at least 2.')
    half = rng.standard_normal((n // 2, dist.dimension))
    draws = np.concatenate([half, -half])
    return [(dist.theta + dist.sigma * z, z) for z in draws]


def utilities(fitnesses: Sequence[float]) -> np.ndarray:
    """Rank-based utilities, best rank first, zero-sum. Tied candidates share their mean utility."""
    values = np.asarray(fitnesses, dtype=np.float64)
    n = values.size
    ranks = np.arange(1, n + 1)
    raw = np.maximum(0.0, np.log(n / 2.0 + 1.0) - np.log(ranks))
    by_rank = raw / raw.sum() - 1.0 / n

    order = np.argsort(-values, kind='stable')
    result = np.empty(n)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and values[order[stop]] == values[order[start]]:
            stop += 1
        result[order[start:stop]] = np.mean(by_rank[start:stop])
        start = stop
    return result


def _is_mirrored(draws: np.ndarray) -> bool:
    half = len(draws) // 2
    return len(draws) % 2 == 0 and np.array_equal(draws[half:], -draws[:half])


def snes_update(
    dist: SearchDistribution,
    samples: Sequence[Sample],
    fitnesses: Sequence[float],
    cfg: SnesConfig,
) -> SearchDistribution:
    if len(samples) != cfg.population_size or len(fitnesses) != cfg.population_size:
        raise ValueError(f'Expected {cfg.population_size} samples and fitnesses, '
                         f'got {len(samples)} and {len(fitnesses)}.')

    values = np.array(fitnesses, dtype=np.float64)
    bad = ~np.isfinite(values)
    if np.any(bad):
        logger.warning('Non-finite fitness for candidates %s; ranking them last.', np.flatnonzero(bad).tolist())
        values[bad] = -np.inf
    if np.all(values == values[0]):
        return dist

    u = utilities(values)
    draws = np.stack([z for _, z in samples])
    if _is_mirrored(draws):
        half = len(draws) // 2
        plus, minus = u[:half], u[half:]
        grad_theta = (plus - minus) @ draws[:half]
        grad_sigma = (plus + minus) @ (draws[:half] ** 2 - 1.0)
    else:
        grad_theta = u @ draws
        grad_sigma = u @ (draws ** 2 - 1.0)

    theta = dist.theta + cfg.eta_theta * dist.sigma * grad_theta
    sigma = dist.sigma * np.exp(0.5 * cfg.sigma_rate(dist.dimension) * grad_sigma)
    return SearchDistribution(theta, sigma)


@dataclass
class EvolutionResult:
    best: np.ndarray
    best_fitness: float
    dist: SearchDistribution
    history: List[Dict] = field(default_factory=list)


def evolve(
    dist: SearchDistribution,
    fitness_fn: Callable[[int, List[np.ndarray]], Sequence[float]],
    cfg: SnesConfig,
    rng: np.random.Generator,
    baseline_fitness: float = -np.inf,
    log_writer: Optional[JsonLinesWriter] = None,
) -> EvolutionResult:
    """Run cfg.generations generations and keep the best candidate ever evaluated.

    fitness_fn(generation, candidates) scores one generation (generations count from 1). The
    starting centre competes with baseline_fitness.
    """
    best = dist.theta.copy()
    best_fitness = baseline_fitness
    history = []
    for generation in range(1, cfg.generations + 1):
        samples = sample_population(dist, cfg.population_size, rng)
        fitnesses = np.asarray(fitness_fn(generation, [candidate for candidate, _ in samples]), dtype=np.float64)
        top = int(np.argmax(np.where(np.isfinite(fitnesses), fitnesses, -np.inf)))
        if fitnesses[top] > best_fitness:
            best_fitness = float(fitnesses[top])
            best = samples[top][0].copy()
        dist = snes_update(dist, samples, fitnesses, cfg)

        record = {
            'kind': 'generation',
            'generation': generation,
            'best_fitness': float(np.max(fitnesses)),
            'mean_fitness': float(np.mean(fitnesses)),
            'worst_fitness': float(np.min(fitnesses)),
            'best_ever_fitness': best_fitness,
            'mean_sigma': float(np.mean(dist.sigma)),
        }
        history.append(record)
        if log_writer is not None:
            log_writer.write(record)
        logger.debug('generation %d: best %.4f, mean sigma %.3g', generation, best_fitness, record['mean_sigma'])
    return EvolutionResult(best=best, best_fitness=best_fitness, dist=dist, history=history)


def noisy_rollout_action(policy: Network, observation: np.ndarray, sigma: float, rng: np.random.Generator) -> float:
    """Perturb the greedy action in pre-tanh space: tanh(atanh(greedy) + eps), eps ~ N(0, sigma^2)."""
    greedy = act_greedy(policy, observation)
    if sigma == 0:
        return greedy
    if abs(greedy) >= 1.0:
        logger.debug('Greedy action saturated at %+.0f; clamping the pre-tanh value to %g.', greedy, PRE_TANH_LIMIT)
        pre_tanh = np.sign(greedy) * PRE_TANH_LIMIT
    else:
        pre_tanh = float(np.clip(np.arctanh(greedy), -PRE_TANH_LIMIT, PRE_TANH_LIMIT))
    return float(np.tanh(pre_tanh + rng.normal(0.0, sigma)))


class NoisyPolicyController:
    """Policy controller whose actions carry pre-tanh Gaussian noise."""

    def __init__(self, arch: MlpArchitecture, params: np.ndarray, sigma: float, rng: np.random.Generator):
        self.policy = Network(arch, params)
        self.sigma = sigma
        self.rng = rng

    def __call__(self, state: State) -> float:
        return noisy_rollout_action(self.policy, featurize(state), self.sigma, self.rng)


class NoisyControllerFactory:
    """Picklable seed -> NoisyPolicyController factory; the noise stream is derived from the seed."""

    def __init__(self, arch: MlpArchitecture, params: np.ndarray, sigma: float):
        self.arch = arch
        self.params = np.array(params, dtype=np.float64)
        self.sigma = sigma

    def __call__(self, seed: int) -> NoisyPolicyController:
        return NoisyPolicyController(self.arch, self.params, self.sigma, make_rng(seed, 1))


def _candidate_fitness(task) -> float:
    arch, params, model_params, reward_cfg, score_fn, sigma, seeds = task
    factory = NoisyControllerFactory(arch, params, sigma)
    scores = []
    for seed in seeds:
        traj = run_episode(factory(seed), model_params, seed=seed, reward_cfg=reward_cfg)
        if traj.diverged:
            logger.warning('Candidate rollout diverged (seed %d); assigning the worst fitness.', seed)
            return -np.inf
        scores.append(score_fn(traj))
    return float(np.mean(scores))


def evaluate_population(
    arch: MlpArchitecture,
    candidates: Sequence[np.ndarray],
    model_params: ModelParams,
    score_fn: ScoreFn,
    cfg: SnesConfig,
    generation: int,
    reward_cfg: Optional[RewardConfig] = None,
    workers: int = 1,
) -> List[float]:
    """Mean score_fn over cfg.fitness_repeats noisy rollouts per candidate.

    Rollout r of candidate k is seeded with derive_seed(cfg.seed, generation, k, r), so the
    result does not depend on the number of workers.
    """
    tasks = []
    for k, params in enumerate(candidates):
        seeds = [derive_seed(cfg.seed, generation, k, r) for r in range(cfg.fitness_repeats)]
        tasks.append((arch, params, model_params, reward_cfg, score_fn, cfg.action_noise_sigma, seeds))
    return parallel_map(_candidate_fitness, tasks, workers)


@dataclass
class FinetuneResult:
    checkpoint: PolicyCheckpoint
    best_fitness: float
    baseline_fitness: float
    log: List[Dict] = field(default_factory=list)


def finetune(
    checkpoint: PolicyCheckpoint,
    model_params: ModelParams,
    score_fn: ScoreFn,
    snes_cfg: SnesConfig,
    reward_cfg: Optional[RewardConfig] = None,
    log_writer: Optional[JsonLinesWriter] = None,
    workers: int = 1,
) -> FinetuneResult:
    """Evolve the policy parameters of a checkpoint; Q-network sections are carried over untouched.

    score_fn must be picklable when workers > 1 (a module-level function or a functools.partial).
    """
    if snes_cfg.generations == 0:
        return FinetuneResult(checkpoint=checkpoint, best_fitness=float('nan'), baseline_fitness=float('nan'))

    arch = checkpoint.policy_arch
    base = checkpoint.policy_params.copy()
    window = arch.final_layer_slice if snes_cfg.final_layer_only else slice(0, base.size)

    def full_params(candidate: np.ndarray) -> np.ndarray:
        params = base.copy()
        params[window] = candidate
        return params

    def fitness_fn(generation: int, candidates: List[np.ndarray]) -> List[float]:
        return evaluate_population(arch, [full_params(c) for c in candidates], model_params, score_fn,
                                   snes_cfg, generation, reward_cfg, workers)

    baseline = fitness_fn(0, [base[window]])[0]
    logger.info('SNES over %d parameters, baseline fitness %.4f.', base[window].size, baseline)
    log_writer = log_writer or JsonLinesWriter()
    log_writer.write({'kind': 'baseline', 'generation': 0, 'fitness': baseline})

    dist = SearchDistribution.isotropic(base[window], snes_cfg.sigma_init)
    result = evolve(dist, fitness_fn, snes_cfg, make_rng(snes_cfg.seed, 0), baseline, log_writer)
    best = checkpoint.with_policy_params(
        full_params(result.best),
        stage='snes',
        generations=snes_cfg.generations,
        fitness=result.best_fitness,
        baseline_fitness=baseline,
    )
    return FinetuneResult(checkpoint=best, best_fitness=result.best_fitness, baseline_fitness=baseline,
                          log=log_writer.records)
