"""Trajectory-level metrics used by the performance score."""

from typing import Dict, Optional

import numpy as np

from .trajectory import Trajectory


def end_effector_heights(traj: Trajectory) -> np.ndarray:
    theta1 = traj.states[:, 0]
    theta2 = traj.states[:, 1]
    return -traj.params.l1 * np.cos(theta1) - traj.params.l2 * np.cos(theta1 + theta2)


def swingup_time(traj: Trajectory, y_th: float) -> Optional[float]:
    """First time after which the tip stays above y_th until the end of the episode, None if never."""
    if not len(traj):
        return None
    below = np.flatnonzero(end_effector_heights(traj) <= y_th)
    if not below.size:
        return float(traj.times[0])
    first_above = int(below[-1]) + 1
    if first_above >= len(traj):
        return None
    return float(traj.times[first_above])


def is_successful(traj: Trajectory, y_th: float, window: float) -> bool:
    """Tip above y_th at every sample of the final `window` seconds."""
    if traj.diverged or len(traj) < 2:
        return False
    window_steps = int(round(window / traj.dt))
    tail = end_effector_heights(traj)[-(window_steps + 1):]
    return bool(np.all(tail > y_th))


def integrated_torque(traj: Trajectory) -> float:
    """Integral of |tau1| + |tau2| over the episode (N*m*s)."""
    return float(np.sum(np.abs(traj.torques[1:])) * traj.dt)


def integrated_energy(traj: Trajectory) -> float:
    """Integral of the absolute mechanical power |tau . omega| delivered by the motor (J)."""
    power = np.abs(np.sum(traj.torques[1:] * traj.states[1:, 2:], axis=1))
    return float(np.sum(power) * traj.dt)


def peak_torque(traj: Trajectory) -> float:
    return float(np.max(np.abs(traj.torques))) if len(traj) else 0.0


def peak_velocity(traj: Trajectory) -> float:
    return float(np.max(np.abs(traj.states[:, 2:]))) if len(traj) else 0.0


def trajectory_metrics(traj: Trajectory, y_th: float) -> Dict[str, Optional[float]]:
    return {
        'swingup_time': swingup_time(traj, y_th),
        'torque_integral': integrated_torque(traj),
        'energy': integrated_energy(traj),
        'peak_torque': peak_torque(traj),
        'peak_velocity': peak_velocity(traj),
    }
