"""Fixed-length swing-up episodes at a control rate coarser than the plant rate."""

import logging
from dataclasses import replace
from typing import Dict, Optional, Tuple

import numpy as np

from .approximator import featurize
from .dynamics import ModelParams, State, apply_actuation, rk4_step
from .reward import RewardConfig, StepContext, surrogate_reward

logger = logging.getLogger(__name__)

PLANT_DT = 0.002
EPISODE_DURATION = 10.0
_RANDOMIZED_PARAMS = ('m1', 'm2', 'r1', 'r2', 'I1', 'I2', 'b1', 'b2')


class SimulationDivergedError(RuntimeError):
    """Raised when the integrated state stops being finite."""


def control_substeps(control_hz: float, dt: float = PLANT_DT) -> int:
    substeps = int(round(1.0 / (control_hz * dt)))
    if substeps < 1 or not np.isclose(substeps * dt * control_hz, 1.0):
        raise ValueError(f'Control rate {control_hz} Hz is not a whole divisor of the plant rate {1.0 / dt:g} Hz.')
    return substeps


def randomize_params(params: ModelParams, spread: float, rng: np.random.Generator) -> ModelParams:
    """Scale masses, centre-of-mass distances, inertias and damping by U(1 - spread, 1 + spread)."""
    if spread <= 0:
        return params
    factors = rng.uniform(1.0 - spread, 1.0 + spread, size=len(_RANDOMIZED_PARAMS))
    changes = {name: getattr(params, name) * factor for name, factor in zip(_RANDOMIZED_PARAMS, factors)}
    changes['r1'] = min(changes['r1'], params.l1)
    changes['r2'] = min(changes['r2'], params.l2)
    return replace(params, **changes)


class SwingUpEnv:
    """Training environment: hanging start, zero-order-hold actions, surrogate reward on the post-step state."""

    def __init__(
        self,
        params: ModelParams,
        reward_cfg: RewardConfig,
        control_hz: float = 100.0,
        dt: float = PLANT_DT,
        duration: float = EPISODE_DURATION,
        start_noise: float = 0.01,
        domain_randomization: float = 0.0,
    ):
        reward_cfg.check_reach(params)
        if duration <= 0:
            raise ValueError('Episode duration must be positive.')
        if not 0 <= domain_randomization < 1:
            raise ValueError('Domain randomization spread must lie in [0, 1).')
        self.nominal_params = params
        self.params = params
        self.reward_cfg = reward_cfg
        self.dt = dt
        self.substeps = control_substeps(control_hz, dt)
        self.max_decisions = int(round(duration * control_hz))
        self.start_noise = start_noise
        self.domain_randomization = domain_randomization
        self._x = np.zeros(4)
        self._prev_action = 0.0
        self._decisions = 0

    @property
    def state(self) -> State:
        return State.from_array(self._x)

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.params = randomize_params(self.nominal_params, self.domain_randomization, rng)
        angles = rng.uniform(-self.start_noise, self.start_noise, size=2) if self.start_noise > 0 else np.zeros(2)
        self._x = np.array([angles[0], angles[1], 0.0, 0.0])
        self._prev_action = 0.0
        self._decisions = 0
        return featurize(self._x)

    def step(self, action: float) -> Tuple[np.ndarray, float, bool, Dict]:
        action = float(np.clip(action, -1.0, 1.0))
        tau = apply_actuation(action, self.params).as_array()
        x = self._x
        for _ in range(self.substeps):
            x = rk4_step(x, tau, self.dt, self.params)
        if not np.all(np.isfinite(x)):
            raise SimulationDivergedError(f'Plant state diverged after {self._decisions} decisions.')
        self._x = x

        state = State.from_array(x)
        reward = surrogate_reward(state, StepContext(action, self._prev_action), self.params, self.reward_cfg)
        self._prev_action = action
        self._decisions += 1
        done = self._decisions >= self.max_decisions
        return featurize(x), reward, done, {'state': state}


def make_env_factory(params: ModelParams, reward_cfg: RewardConfig, control_hz: float,
                     domain_randomization: float = 0.0, start_noise: Optional[float] = 0.01):
    def factory() -> SwingUpEnv:
        return SwingUpEnv(params, reward_cfg, control_hz=control_hz, start_noise=start_noise,
                          domain_randomization=domain_randomization)
    return factory
