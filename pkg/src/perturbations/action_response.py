import numpy as np

from .base import BasePerturbation, PerturbationCategory
from ..dynamics import ModelParams


class ActionResponsePerturbation(BasePerturbation):
    """
    Class that implements a weakened motor response.
    """
    category = PerturbationCategory.ACTION_RESPONSE

    def torque(self, tau: np.ndarray, params: ModelParams, rng: np.random.Generator) -> np.ndarray:
        return tau * (1.0 - self.magnitude)
