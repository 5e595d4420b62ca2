import numpy as np

from .base import BasePerturbation, PerturbationCategory


class VelocityNoisePerturbation(BasePerturbation):
    """
    Class that implements gaussian measurement noise on the observed joint velocities.
    """
    category = PerturbationCategory.VELOCITY_NOISE

    def observe(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        noisy = np.array(x, dtype=np.float64)
        noisy[2:] += rng.normal(0.0, self.magnitude, size=2)
        return noisy
