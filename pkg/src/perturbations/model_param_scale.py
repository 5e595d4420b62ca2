from .base import BasePerturbation, PerturbationCategory
from ..dynamics import ModelParams, scalable_params


class ModelParamScalePerturbation(BasePerturbation):
    """
    Class that implements a constant mismatch of one plant parameter.
    """
    category = PerturbationCategory.MODEL_PARAM_SCALE

    def __init__(self, magnitude: float, parameter: str = 'm2'):
        super().__init__(magnitude)
        if parameter not in scalable_params():
            raise ValueError(f'Unknown model parameter: {parameter}')
        self.parameter = parameter

    def plant_params(self, params: ModelParams) -> ModelParams:
        return params.scaled(self.parameter, 1.0 + self.magnitude)
