from .base import BasePerturbation, PerturbationCategory


class TorqueDelayPerturbation(BasePerturbation):
    """
    Class that implements a transport delay between the controller and the motor.
    """
    category = PerturbationCategory.TORQUE_DELAY

    def delay_steps(self, dt: float) -> int:
        return int(round(self.magnitude / dt))
