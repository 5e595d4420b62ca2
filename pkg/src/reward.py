"""Height-gated surrogate reward used for SAC training."""

from dataclasses import dataclass, fields
from enum import Enum

import numpy as np

from .dynamics import ModelParams, Setting, State, end_effector_height, kinetic_energy, potential_energy


class Branch(Enum):
    ABOVE_THRESHOLD = 'above'
    BELOW_THRESHOLD = 'below'


@dataclass(frozen=True)
class RewardConfig:
    alpha: float = 2.0
    beta: float = 1.0
    rho1: float = 0.1
    rho2: float = 0.02
    phi1: float = 0.15
    phi2: float = 0.15
    eta: float = 0.02
    y_th: float = 0.35

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value):
                raise ValueError(f'Reward parameter {f.name} must be finite.')
            if f.name != 'y_th' and value < 0:
                raise ValueError(f'Reward weight {f.name} must be non-negative, got {value}.')

    @classmethod
    def for_setting(cls, setting: Setting) -> 'RewardConfig':
        """Published swing-up weights; only the height threshold differs between the two robots."""
        return cls(y_th=0.375 if setting == Setting.ACROBOT else 0.35)

    def check_reach(self, params: ModelParams) -> None:
        if not -params.reach < self.y_th < params.reach:
            raise ValueError(f'y_th={self.y_th} is outside the reachable height range of the plant.')


@dataclass(frozen=True)
class StepContext:
    action: float
    prev_action: float = 0.0

    def __post_init__(self) -> None:
        for name in ('action', 'prev_action'):
            value = getattr(self, name)
            if not np.isfinite(value) or abs(value) > 1.0:
                raise ValueError(f'{name} must be a finite value in [-1, 1], got {value}.')

    @property
    def action_change(self) -> float:
        return (self.action - self.prev_action) ** 2


def branch(state: State, params: ModelParams, cfg: RewardConfig) -> Branch:
    if end_effector_height(state, params) > cfg.y_th:
        return Branch.ABOVE_THRESHOLD
    return Branch.BELOW_THRESHOLD


def surrogate_reward(state: State, ctx: StepContext, params: ModelParams, cfg: RewardConfig) -> float:
    """Reward for the post-step state reached with ctx.action."""
    v = potential_energy(state, params)
    a = ctx.action
    delta = ctx.action_change
    if branch(state, params, cfg) == Branch.ABOVE_THRESHOLD:
        t = kinetic_energy(state, params)
        return float(v + cfg.alpha * (1.0 + np.cos(state.theta2)) ** 2 - cfg.beta * t
                     - cfg.rho1 * a ** 2 - cfg.phi1 * delta)
    return float(v - cfg.rho2 * a ** 2 - cfg.phi2 * delta
                 - cfg.eta * (state.omega1 ** 2 + state.omega2 ** 2))
