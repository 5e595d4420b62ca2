"""Two-link pendulum rigid-body model with acrobot/pendubot actuation.

Angle convention: theta1 = 0 is hanging straight down, theta1 = pi is upright, theta2 is measured
relative to link 1. The equations of motion use the standard manipulator form

    M(q) q'' + C(q, q') q' + G(q) + F(q') = tau

with viscous damping and tanh-smoothed Coulomb friction in F.
"""

from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Iterable, List, Tuple

import numpy as np

from .utils import wrap_angle

# Velocity scale of the tanh Coulomb friction shaping (rad/s).
FRICTION_SMOOTHING = 1e-2


class Setting(Enum):
    """
    Which joint carries the motor.

    ACROBOT: shoulder passive, elbow actuated.
    PENDUBOT: shoulder actuated, elbow passive.
    """
    ACROBOT = 'acrobot'
    PENDUBOT = 'pendubot'


class InvalidActionError(ValueError):
    """Raised for a non-finite normalized action."""


@dataclass(frozen=True)
class State:
    theta1: float
    theta2: float
    omega1: float
    omega2: float

    def __post_init__(self) -> None:
        if not all(np.isfinite(value) for value in self.as_array()):
            raise ValueError('State components must be finite.')

    def as_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2, self.omega1, self.omega2], dtype=np.float64)

    @classmethod
    def from_array(cls, values: Iterable[float]) -> 'State':
        theta1, theta2, omega1, omega2 = (float(v) for v in values)
        return cls(theta1, theta2, omega1, omega2)

    @classmethod
    def hanging(cls) -> 'State':
        return cls(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class TorquePair:
    tau1: float
    tau2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.tau1, self.tau2], dtype=np.float64)


@dataclass(frozen=True)
class ModelParams:
    """Physical plant parameters. Inertias I1, I2 are taken about the links' own joints."""
    m1: float
    m2: float
    l1: float
    l2: float
    r1: float
    r2: float
    I1: float
    I2: float
    b1: float
    b2: float
    cf1: float
    cf2: float
    g: float
    tau_max: float
    setting: Setting

    def __post_init__(self) -> None:
        _validate_model_params(self)

    @classmethod
    def defaults(cls, setting: Setting = Setting.PENDUBOT) -> 'ModelParams':
        """Repo defaults: two uniform 0.5 kg / 0.3 m rods, frictionless, 3 N*m motor."""
        mass, length = 0.5, 0.3
        rod_inertia = mass * (length / 2.0) ** 2 + mass * length ** 2 / 12.0
        return cls(
            m1=mass, m2=mass, l1=length, l2=length, r1=length / 2.0, r2=length / 2.0,
            I1=rod_inertia, I2=rod_inertia, b1=0.0, b2=0.0, cf1=0.0, cf2=0.0,
            g=9.81, tau_max=3.0, setting=setting,
        )

    @property
    def reach(self) -> float:
        return self.l1 + self.l2

    def scaled(self, name: str, factor: float) -> 'ModelParams':
        """Copy with one numeric parameter multiplied by factor.

        Centre-of-mass distances are capped at their link length, so r1, r2, l1 and l2 can be
        scaled either way without leaving the valid range.
        """
        if name not in scalable_params():
            raise ValueError(f'Unknown model parameter: {name}')
        changes = {name: getattr(self, name) * factor}
        if name in ('r1', 'l1'):
            changes['r1'] = min(changes.get('r1', self.r1), changes.get('l1', self.l1))
        if name in ('r2', 'l2'):
            changes['r2'] = min(changes.get('r2', self.r2), changes.get('l2', self.l2))
        return replace(self, **changes)


def scalable_params() -> Tuple[str, ...]:
    """Names of the numeric ModelParams fields."""
    return tuple(f.name for f in fields(ModelParams) if f.name != 'setting')


def _validate_model_params(params: ModelParams) -> None:
    for name in ('m1', 'm2', 'l1', 'l2', 'I1', 'I2', 'g', 'tau_max'):
        value = getattr(params, name)
        if not np.isfinite(value) or value <= 0:
            raise ValueError(f'Model parameter {name} must be positive, got {value}.')
    for name in ('b1', 'b2', 'cf1', 'cf2'):
        value = getattr(params, name)
        if not np.isfinite(value) or value < 0:
            raise ValueError(f'Model parameter {name} must be non-negative, got {value}.')
    if not 0 < params.r1 <= params.l1:
        raise ValueError('Model parameter r1 must lie in (0, l1].')
    if not 0 < params.r2 <= params.l2:
        raise ValueError('Model parameter r2 must lie in (0, l2].')
    if not isinstance(params.setting, Setting):
        raise ValueError(f'Invalid actuation setting: {params.setting}')


def apply_actuation(action: float, params: ModelParams) -> TorquePair:
    """Map a normalized action to joint torques; the passive joint always gets exactly 0."""
    if not np.isfinite(action):
        raise InvalidActionError(f'Action must be finite, got {action}.')

    torque = float(np.clip(action, -1.0, 1.0)) * params.tau_max
    if params.setting == Setting.ACROBOT:
        return TorquePair(0.0, torque)
    return TorquePair(torque, 0.0)


def mass_matrix(theta2: float, params: ModelParams) -> np.ndarray:
    coupling = params.m2 * params.l1 * params.r2 * np.cos(theta2)
    m11 = params.I1 + params.I2 + params.m2 * params.l1 ** 2 + 2.0 * coupling
    m12 = params.I2 + coupling
    return np.array([[m11, m12], [m12, params.I2]], dtype=np.float64)


def _coriolis(theta2: float, omega1: float, omega2: float, params: ModelParams) -> np.ndarray:
    h = params.m2 * params.l1 * params.r2 * np.sin(theta2)
    return np.array([
        -h * (2.0 * omega1 * omega2 + omega2 ** 2),
        h * omega1 ** 2,
    ])


def _gravity(theta1: float, theta2: float, params: ModelParams) -> np.ndarray:
    outer = params.m2 * params.g * params.r2 * np.sin(theta1 + theta2)
    return np.array([
        params.g * (params.m1 * params.r1 + params.m2 * params.l1) * np.sin(theta1) + outer,
        outer,
    ])


def _friction(omega1: float, omega2: float, params: ModelParams) -> np.ndarray:
    return np.array([
        params.b1 * omega1 + params.cf1 * np.tanh(omega1 / FRICTION_SMOOTHING),
        params.b2 * omega2 + params.cf2 * np.tanh(omega2 / FRICTION_SMOOTHING),
    ])


def _accelerations(x: np.ndarray, tau: np.ndarray, params: ModelParams) -> np.ndarray:
    theta1, theta2, omega1, omega2 = x
    rhs = tau - _coriolis(theta2, omega1, omega2, params) - _gravity(theta1, theta2, params) \
        - _friction(omega1, omega2, params)
    return np.linalg.solve(mass_matrix(theta2, params), rhs)


def forward_dynamics(state: State, tau: TorquePair, params: ModelParams) -> Tuple[float, float]:
    """Angular accelerations (rad/s^2) of both joints."""
    alpha1, alpha2 = _accelerations(state.as_array(), tau.as_array(), params)
    return float(alpha1), float(alpha2)


def _derivative(x: np.ndarray, tau: np.ndarray, params: ModelParams) -> np.ndarray:
    return np.concatenate((x[2:], _accelerations(x, tau, params)))


def rk4_step(x: np.ndarray, tau: np.ndarray, dt: float, params: ModelParams) -> np.ndarray:
    """One classical Runge-Kutta step on a raw state vector; tau is held for the whole step."""
    k1 = _derivative(x, tau, params)
    k2 = _derivative(x + 0.5 * dt * k1, tau, params)
    k3 = _derivative(x + 0.5 * dt * k2, tau, params)
    k4 = _derivative(x + dt * k3, tau, params)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state: State, action: float, dt: float, params: ModelParams) -> State:
    """Advance the plant by dt seconds under a zero-order-hold action."""
    if dt < 0:
        raise ValueError('Integration step must be non-negative.')
    if dt == 0:
        return state

    tau = apply_actuation(action, params).as_array()
    return State.from_array(rk4_step(state.as_array(), tau, dt, params))


def integrate(state: State, actions: Iterable[float], dt: float, params: ModelParams) -> List[State]:
    """Roll the plant through a sequence of actions, returning every visited state."""
    states = [state]
    for action in actions:
        states.append(step(states[-1], action, dt, params))
    return states


def kinetic_energy(state: State, params: ModelParams) -> float:
    velocities = np.array([state.omega1, state.omega2])
    return float(0.5 * velocities @ mass_matrix(state.theta2, params) @ velocities)


def potential_energy(state: State, params: ModelParams) -> float:
    """Potential energy, zero at the hanging rest configuration."""
    c1 = np.cos(state.theta1)
    c12 = np.cos(state.theta1 + state.theta2)
    lift1 = params.m1 * params.r1 * (1.0 - c1)
    lift2 = params.m2 * (params.l1 * (1.0 - c1) + params.r2 * (1.0 - c12))
    return float(params.g * (lift1 + lift2))


def total_energy(state: State, params: ModelParams) -> float:
    return kinetic_energy(state, params) + potential_energy(state, params)


def end_effector_height(state: State, params: ModelParams) -> float:
    """Tip height above the base pivot (m)."""
    return float(-params.l1 * np.cos(state.theta1) - params.l2 * np.cos(state.theta1 + state.theta2))


def normalize_angles(state: State) -> State:
    return State(wrap_angle(state.theta1), wrap_angle(state.theta2), state.omega1, state.omega2)
