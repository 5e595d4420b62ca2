from typing import Optional

from .base import BasePerturbation, PerturbationCategory
from .model_param_scale import ModelParamScalePerturbation
from .velocity_noise import VelocityNoisePerturbation
from .torque_noise import TorqueNoisePerturbation
from .torque_delay import TorqueDelayPerturbation
from .action_response import ActionResponsePerturbation


_BY_CATEGORY = {
    PerturbationCategory.MODEL_PARAM_SCALE: ModelParamScalePerturbation,
    PerturbationCategory.VELOCITY_NOISE: VelocityNoisePerturbation,
    PerturbationCategory.TORQUE_NOISE: TorqueNoisePerturbation,
    PerturbationCategory.TORQUE_DELAY: TorqueDelayPerturbation,
    PerturbationCategory.ACTION_RESPONSE: ActionResponsePerturbation,
}


def make_perturbation(category: PerturbationCategory, magnitude: float,
                      parameter: Optional[str] = None) -> BasePerturbation:
    if category == PerturbationCategory.MODEL_PARAM_SCALE:
        return ModelParamScalePerturbation(magnitude, parameter=parameter or 'm2')
    return _BY_CATEGORY[category](magnitude)


__all__ = ['BasePerturbation', 'PerturbationCategory', 'ModelParamScalePerturbation', 'VelocityNoisePerturbation',
           'TorqueNoisePerturbation', 'TorqueDelayPerturbation', 'ActionResponsePerturbation', 'make_perturbation']
