"""Competition-style evaluation: 10 s episodes at 500 Hz, a performance score and a robustness sweep.

Performance score (configurable through ScoreCriteria):

    0                                                     if the swing-up is not held for the
                                                          final `success_window` seconds
    clamp(1 - sum_k w_k * min(1, metric_k / n_k), 0, 1)   otherwise

over the metrics swing-up time, integrated |torque|, motor energy, peak |torque| and peak |velocity|.
Robustness score: the fraction of successful trials per (category, magnitude), averaged over the
magnitudes of a category and then over the categories.
"""

import json
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import ModelParams, Setting, State, apply_actuation, rk4_step, scalable_params
from .env import EPISODE_DURATION, PLANT_DT
from .metrics import is_successful, trajectory_metrics
from .perturbations import BasePerturbation, PerturbationCategory, make_perturbation
from .reward import RewardConfig, StepContext, surrogate_reward
from .trajectory import Trajectory
from .utils import derive_seed, parallel_map

logger = logging.getLogger(__name__)

CRITERIA = ('swingup_time', 'torque_integral', 'energy', 'peak_torque', 'peak_velocity')
SCORE_FORMULA = '0 if not successful else clamp(1 - sum_k w_k * min(1, metric_k / normalizer_k), 0, 1)'

Controller = Callable[[State], float]
ControllerFactory = Callable[[int], Controller]


@dataclass(frozen=True)
class ScoreCriteria:
    weights: Dict[str, float]
    normalizers: Dict[str, float]
    height_threshold: float
    success_window: float = 2.0

    def __post_init__(self) -> None:
        for name, table in (('weights', self.weights), ('normalizers', self.normalizers)):
            if set(table) != set(CRITERIA):
                raise ValueError(f'Score {name} must define exactly {", ".join(CRITERIA)}.')
        if any(w < 0 for w in self.weights.values()):
            raise ValueError('Score weights must be non-negative.')
        if any(n <= 0 for n in self.normalizers.values()):
            raise ValueError('Score normalizers must be positive.')
        if self.success_window <= 0:
            raise ValueError('Success window must be positive.')

    @classmethod
    def defaults(cls, setting: Setting = Setting.PENDUBOT) -> 'ScoreCriteria':
        return cls(
            weights={name: 0.2 for name in CRITERIA},
            normalizers={'swingup_time': 10.0, 'torque_integral': 10.0, 'energy': 10.0,
                         'peak_torque': 5.0, 'peak_velocity': 40.0},
            height_threshold=0.375 if setting == Setting.ACROBOT else 0.35,
        )


@dataclass(frozen=True)
class PerturbationSpec:
    category: PerturbationCategory
    magnitudes: Tuple[float, ...]
    trials: int = 2
    parameter: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, 'magnitudes', tuple(float(m) for m in self.magnitudes))
        if not self.magnitudes:
            raise ValueError(f'Perturbation grid for {self.category.value} is empty.')
        if any(m < 0 for m in self.magnitudes):
            raise ValueError(f'Perturbation magnitudes for {self.category.value} must be non-negative.')
        if self.trials <= 0:
            raise ValueError('Perturbation trials must be a positive integer.')
        if self.parameter is not None and self.parameter not in scalable_params():
            allowed = ', '.join(scalable_params())
            raise ValueError(f'Unknown model parameter {self.parameter!r}; expected one of {allowed}.')


def default_perturbation_suite() -> List[PerturbationSpec]:
    return [
        PerturbationSpec(PerturbationCategory.MODEL_PARAM_SCALE, (0.0, 0.1, 0.2, 0.3), parameter='m2'),
        PerturbationSpec(PerturbationCategory.VELOCITY_NOISE, (0.0, 0.05, 0.1, 0.2)),
        PerturbationSpec(PerturbationCategory.TORQUE_NOISE, (0.0, 0.05, 0.1, 0.2)),
        PerturbationSpec(PerturbationCategory.TORQUE_DELAY, (0.0, 0.004, 0.01, 0.02)),
        PerturbationSpec(PerturbationCategory.ACTION_RESPONSE, (0.0, 0.1, 0.2, 0.3)),
    ]


def run_episode(
    controller: Controller,
    params: ModelParams,
    perturbation: Optional[BasePerturbation] = None,
    seed: int = 0,
    reward_cfg: Optional[RewardConfig] = None,
    dt: float = PLANT_DT,
    duration: float = EPISODE_DURATION,
) -> Trajectory:
    """Roll the plant from exact hanging rest, querying the controller at every plant step."""
    reward_cfg = reward_cfg or RewardConfig.for_setting(params.setting)
    plant = perturbation.plant_params(params) if perturbation else params
    rng = np.random.default_rng(derive_seed(seed, 0))
    n_steps = int(round(duration / dt))
    delay = perturbation.delay_steps(dt) if perturbation else 0
    pending = deque([0.0] * delay)

    times = np.arange(n_steps + 1) * dt
    states = np.zeros((n_steps + 1, 4))
    torques = np.zeros((n_steps + 1, 2))
    actions = np.zeros(n_steps + 1)
    rewards = np.zeros(n_steps + 1)

    x = np.zeros(4)
    prev_action = 0.0
    diverged = False
    last = n_steps
    for i in range(1, n_steps + 1):
        observed = perturbation.observe(x, rng) if perturbation else x
        action = float(np.clip(controller(State.from_array(observed)), -1.0, 1.0))
        if delay:
            pending.append(action)
            action = pending.popleft()
        tau = apply_actuation(action, plant).as_array()
        if perturbation:
            tau = perturbation.torque(tau, plant, rng)

        with np.errstate(over='ignore', invalid='ignore'):
            try:
                x = rk4_step(x, tau, dt, plant)
            except np.linalg.LinAlgError:
                x = np.full(4, np.nan)
        if not np.all(np.isfinite(x)):
            logger.warning('Episode diverged at t=%.3f s (seed %d, %r).', times[i], seed, perturbation)
            diverged = True
            last = i - 1
            break

        states[i] = x
        torques[i] = tau
        actions[i] = action
        rewards[i] = surrogate_reward(State.from_array(x), StepContext(action, prev_action), plant, reward_cfg)
        prev_action = action

    return Trajectory(
        times=times[:last + 1],
        states=states[:last + 1],
        torques=torques[:last + 1],
        actions=actions[:last + 1],
        rewards=rewards[:last + 1],
        dt=dt,
        params=plant,
        diverged=diverged,
    )


def performance_breakdown(traj: Trajectory, criteria: ScoreCriteria) -> Dict:
    metrics = trajectory_metrics(traj, criteria.height_threshold)
    success = is_successful(traj, criteria.height_threshold, criteria.success_window)
    penalties = {}
    for name in CRITERIA:
        value = metrics[name]
        normalized = 1.0 if value is None else min(1.0, value / criteria.normalizers[name])
        penalties[name] = criteria.weights[name] * normalized

    score = float(np.clip(1.0 - sum(penalties[name] for name in CRITERIA), 0.0, 1.0)) if success else 0.0
    return {
        'success': success,
        'diverged': traj.diverged,
        'metrics': metrics,
        'penalties': penalties,
        'score': score,
    }


def performance_score(traj: Trajectory, criteria: ScoreCriteria) -> float:
    return performance_breakdown(traj, criteria)['score']


@dataclass(frozen=True)
class RobustnessResult:
    score: float
    category_scores: Dict[str, float]
    curves: Dict[str, List[Tuple[float, float]]]


def _run_trial(task) -> bool:
    controller_factory, params, reward_cfg, criteria, spec, magnitude, seed = task
    perturbation = make_perturbation(spec.category, magnitude, spec.parameter)
    traj = run_episode(controller_factory(seed), params, perturbation=perturbation, seed=seed, reward_cfg=reward_cfg)
    return is_successful(traj, criteria.height_threshold, criteria.success_window)


def robustness_score(
    controller_factory: ControllerFactory,
    specs: Sequence[PerturbationSpec],
    params: ModelParams,
    criteria: ScoreCriteria,
    reward_cfg: Optional[RewardConfig] = None,
    seed: int = 0,
    workers: int = 1,
) -> RobustnessResult:
    """Sweep every (category, magnitude, trial); trial seeds depend only on their grid position."""
    if not specs:
        raise ValueError('Robustness evaluation needs at least one perturbation spec.')

    tasks = []
    for c, spec in enumerate(specs):
        for m, magnitude in enumerate(spec.magnitudes):
            for trial in range(spec.trials):
                tasks.append((controller_factory, params, reward_cfg, criteria, spec, magnitude,
                              derive_seed(seed, c, m, trial)))
    passed = iter(parallel_map(_run_trial, tasks, workers))

    curves: Dict[str, List[Tuple[float, float]]] = {}
    category_scores: Dict[str, float] = {}
    for spec in specs:
        curve = []
        for magnitude in spec.magnitudes:
            successes = sum(next(passed) for _ in range(spec.trials))
            curve.append((magnitude, successes / spec.trials))
        key = spec.category.value if spec.parameter is None else f'{spec.category.value}:{spec.parameter}'
        curves[key] = curve
        category_scores[key] = float(np.mean([rate for _, rate in curve]))
    score = float(np.mean(list(category_scores.values())))
    return RobustnessResult(score=score, category_scores=category_scores, curves=curves)


@dataclass
class ScoreReport:
    performance: float
    robustness: Optional[float] = None
    breakdown: Dict = field(default_factory=dict)
    category_scores: Dict[str, float] = field(default_factory=dict)
    pass_rates: Dict[str, List[Tuple[float, float]]] = field(default_factory=dict)
    criteria: Dict = field(default_factory=dict)
    setting: str = ''

    @property
    def average(self) -> Optional[float]:
        if self.robustness is None:
            return None
        return (self.performance + self.robustness) / 2.0

    def to_dict(self) -> Dict:
        return {
            'setting': self.setting,
            'performance': self.performance,
            'robustness': self.robustness,
            'average': self.average,
            'formula': SCORE_FORMULA,
            'criteria': self.criteria,
            'breakdown': self.breakdown,
            'category_scores': self.category_scores,
            'pass_rates': {key: [list(point) for point in curve] for key, curve in self.pass_rates.items()},
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'ScoreReport':
        return cls(
            performance=data['performance'],
            robustness=data.get('robustness'),
            breakdown=data.get('breakdown', {}),
            category_scores=data.get('category_scores', {}),
            pass_rates={key: [tuple(point) for point in curve] for key, curve in data.get('pass_rates', {}).items()},
            criteria=data.get('criteria', {}),
            setting=data.get('setting', ''),
        )


def criteria_to_dict(criteria: ScoreCriteria) -> Dict:
    return {
        'weights': dict(criteria.weights),
        'normalizers': dict(criteria.normalizers),
        'height_threshold': criteria.height_threshold,
        'success_window': criteria.success_window,
    }


def evaluate(
    controller_factory: ControllerFactory,
    params: ModelParams,
    criteria: ScoreCriteria,
    reward_cfg: Optional[RewardConfig] = None,
    specs: Optional[Sequence[PerturbationSpec]] = None,
    seed: int = 0,
    workers: int = 1,
) -> Tuple[ScoreReport, Trajectory]:
    """Nominal episode plus, when specs are given, the robustness sweep."""
    traj = run_episode(controller_factory(seed), params, seed=seed, reward_cfg=reward_cfg)
    breakdown = performance_breakdown(traj, criteria)
    report = ScoreReport(
        performance=breakdown['score'],
        breakdown=breakdown,
        criteria=criteria_to_dict(criteria),
        setting=params.setting.value,
    )
    if specs:
        result = robustness_score(controller_factory, specs, params, criteria, reward_cfg, seed, workers)
        report.robustness = result.score
        report.category_scores = result.category_scores
        report.pass_rates = result.curves
    return report, traj


def save_report(report: ScoreReport, path: str) -> None:
    with open(path, 'w', encoding='utf-8') as write_file:
        json.dump(report.to_dict(), write_file, indent=4)


def load_report(path: str) -> ScoreReport:
    with open(path, 'r', encoding='utf-8') as handle:
        return ScoreReport.from_dict(json.load(handle))


def _cell(value: Optional[float]) -> str:
    return '-' if value is None else f'{value:.3f}'


def format_report(report: ScoreReport) -> str:
    lines = [
        f'Setting: {report.setting}',
        f'Performance: {_cell(report.performance)}',
        f'Robustness:  {_cell(report.robustness)}',
        f'Average:     {_cell(report.average)}',
        f'Formula: {SCORE_FORMULA}',
        '',
        'Criterion          metric      penalty',
    ]
    metrics = report.breakdown.get('metrics', {})
    penalties = report.breakdown.get('penalties', {})
    for name in CRITERIA:
        lines.append(f'{name:<18} {_cell(metrics.get(name)):>8}   {_cell(penalties.get(name)):>8}')
    if report.pass_rates:
        lines += ['', 'Perturbation pass rates']
        for key, curve in report.pass_rates.items():
            points = ', '.join(f'{magnitude:g}: {rate:.2f}' for magnitude, rate in curve)
            lines.append(f'  {key:<28} {_cell(report.category_scores.get(key))}  [{points}]')
    return '\n'.join(lines)


def comparison_table(named_reports: Sequence[Tuple[str, ScoreReport]]) -> str:
    """Controllers side by side as | Controller | Robustness | Performance | Avg. |."""
    width = max([len('Controller')] + [len(name) for name, _ in named_reports])
    lines = [
        f'| {"Controller":<{width}} | Robustness | Performance | Avg.  |',
        f'|{"-" * (width + 2)}|------------|-------------|-------|',
    ]
    for name, report in named_reports:
        lines.append(f'| {name:<{width}} | {_cell(report.robustness):>10} | {_cell(report.performance):>11} '
                     f'| {_cell(report.average):>5} |')
    return '\n'.join(lines)
