import numpy as np

from .base import BasePerturbation, PerturbationCategory
from ..dynamics import ModelParams, Setting


class TorqueNoisePerturbation(BasePerturbation):
    """
    Class that implements gaussian noise on the motor torque, scaled by the torque limit.
    """
    category = PerturbationCategory.TORQUE_NOISE

    def torque(self, tau: np.ndarray, params: ModelParams, rng: np.random.Generator) -> np.ndarray:
        noisy = np.array(tau, dtype=np.float64)
        joint = 1 if params.setting == Setting.ACROBOT else 0
        noisy[joint] += rng.normal(0.0, self.magnitude * params.tau_max)
        return noisy
