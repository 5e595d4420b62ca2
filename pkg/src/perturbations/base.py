from abc import ABC
from enum import Enum

import numpy as np

from ..dynamics import ModelParams


class PerturbationCategory(Enum):
    """
    Robustness test categories.

    MODEL_PARAM_SCALE: one plant parameter multiplied by (1 + m) for the whole episode.
    VELOCITY_NOISE: N(0, m^2) added to the velocities the controller observes.
    TORQUE_NOISE: N(0, m^2 tau_max^2) added to the motor torque.
    TORQUE_DELAY: actions reach the motor m seconds late (rounded to plant steps).
    ACTION_RESPONSE: motor torque scaled by (1 - m).
    """
    MODEL_PARAM_SCALE = 'model_param_scale'
    VELOCITY_NOISE = 'velocity_noise'
    TORQUE_NOISE = 'torque_noise'
    TORQUE_DELAY = 'torque_delay'
    ACTION_RESPONSE = 'action_response'


class BasePerturbation(ABC):
    """
    Base class for all perturbations. Every hook defaults to leaving the episode untouched;
    successor classes override the hooks their category acts on.
    """

    category: PerturbationCategory

    def __init__(self, magnitude: float):
        if not np.isfinite(magnitude) or magnitude < 0:
            raise ValueError(f'Perturbation magnitude must be non-negative, got {magnitude}.')
        self.magnitude = float(magnitude)

    def plant_params(self, params: ModelParams) -> ModelParams:
        return params

    def observe(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return x

    def delay_steps(self, dt: float) -> int:
        return 0

    def torque(self, tau: np.ndarray, params: ModelParams, rng: np.random.Generator) -> np.ndarray:
        return tau

    def __repr__(self) -> str:
        return f'{type(self).__name__}(magnitude={self.magnitude})'
