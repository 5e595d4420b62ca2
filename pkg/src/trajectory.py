"""Evaluation trajectories and their CSV form."""

import csv
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .dynamics import ModelParams

CSV_COLUMNS = ('t', 'theta1', 'theta2', 'omega1', 'omega2', 'tau1', 'tau2', 'action', 'reward')


class TrajectoryFormatError(ValueError):
    """Raised for malformed trajectory CSV files; the message names the row and column."""


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Row i holds the state at times[i] and the action, torque and reward of the step that produced it.

    Row 0 is the initial state with zero action, torque and reward.
    """
    times: np.ndarray
    states: np.ndarray
    torques: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    dt: float
    params: ModelParams = field(default_factory=ModelParams.defaults)
    diverged: bool = False

    def __post_init__(self) -> None:
        n = len(self.times)
        shapes = {'states': (n, 4), 'torques': (n, 2), 'actions': (n,), 'rewards': (n,)}
        for name, shape in shapes.items():
            if np.shape(getattr(self, name)) != shape:
                raise ValueError(f'Trajectory {name} has shape {np.shape(getattr(self, name))}, expected {shape}.')
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError('Trajectory times must be strictly increasing.')

    def __len__(self) -> int:
        return len(self.times)

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0]) if len(self) else 0.0


def _format(value: float) -> str:
    return format(float(value), '.17g')


def write_csv(trajectory: Trajectory, path: str) -> None:
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(CSV_COLUMNS)
        for i in range(len(trajectory)):
            row = [trajectory.times[i], *trajectory.states[i], *trajectory.torques[i],
                   trajectory.actions[i], trajectory.rewards[i]]
            writer.writerow([_format(value) for value in row])


def read_csv(path: str, params: Optional[ModelParams] = None) -> Trajectory:
    """Parse a trajectory CSV; params supplies the plant the trajectory was recorded on."""
    with open(path, 'r', encoding='utf-8', newline='') as handle:
        rows = list(csv.reader(handle))

    if not rows:
        raise TrajectoryFormatError(f'{path}: file is empty.')
    header = tuple(cell.strip() for cell in rows[0])
    if header != CSV_COLUMNS:
        raise TrajectoryFormatError(f'{path}: row 1: expected header {",".join(CSV_COLUMNS)}, got {",".join(header)}.')
    if len(rows) < 2:
        raise TrajectoryFormatError(f'{path}: no data rows after the header.')

    values: List[List[float]] = []
    for row_number, row in enumerate(rows[1:], start=2):
        if len(row) != len(CSV_COLUMNS):
            raise TrajectoryFormatError(
                f'{path}: row {row_number}: expected {len(CSV_COLUMNS)} columns, got {len(row)}.')
        parsed = []
        for column, cell in zip(CSV_COLUMNS, row):
            try:
                value = float(cell)
            except ValueError:
                raise TrajectoryFormatError(f'{path}: row {row_number}, column {column}: {cell!r} is not a number.')
            if not np.isfinite(value):
                raise TrajectoryFormatError(f'{path}: row {row_number}, column {column}: value is not finite.')
            parsed.append(value)
        values.append(parsed)

    data = np.array(values, dtype=np.float64)
    times = data[:, 0]
    bad = np.flatnonzero(np.diff(times) <= 0)
    if bad.size:
        raise TrajectoryFormatError(f'{path}: row {int(bad[0]) + 3}, column t: time is not increasing.')
    dt = float(times[1] - times[0]) if len(times) > 1 else 0.002
    return Trajectory(
        times=times,
        states=data[:, 1:5],
        torques=data[:, 5:7],
        actions=data[:, 7],
        rewards=data[:, 8],
        dt=dt,
        params=params or ModelParams.defaults(),
    )
