"""Uniform ring-buffer experience replay."""

from dataclasses import dataclass
from typing import Dict

import numpy as np


class InsufficientBufferError(ValueError):
    """Raised when a batch larger than the stored data is requested."""


@dataclass(frozen=True)
class Transition:
    """One environment step. done marks time truncation only; terminal (never set by the swing-up
    task, which has no failure state) is what stops bootstrapping in the critic targets."""
    state: np.ndarray
    action: float
    reward: float
    next_state: np.ndarray
    done: bool
    terminal: bool = False

    def __post_init__(self) -> None:
        if not -1.0 <= self.action <= 1.0:
            raise ValueError(f'Transition action must lie in [-1, 1], got {self.action}.')
        if not (np.all(np.isfinite(self.state)) and np.all(np.isfinite(self.next_state)) and np.isfinite(self.reward)):
            raise ValueError('Transition contains non-finite values.')


class ReplayBuffer:
    """Fixed-capacity buffer; once full, new transitions overwrite the oldest."""

    def __init__(self, capacity: int, observation_size: int):
        if capacity <= 0:
            raise ValueError('Replay capacity must be a positive integer.')
        self.capacity = capacity
        self.states = np.zeros((capacity, observation_size), dtype=np.float64)
        self.actions = np.zeros((capacity, 1), dtype=np.float64)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.next_states = np.zeros((capacity, observation_size), dtype=np.float64)
        self.dones = np.zeros(capacity, dtype=np.float64)
        self.terminals = np.zeros(capacity, dtype=np.float64)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, transition: Transition) -> None:
        index = self.cursor
        self.states[index] = transition.state
        self.actions[index, 0] = transition.action
        self.rewards[index] = transition.reward
        self.next_states[index] = transition.next_state
        self.dones[index] = float(transition.done)
        self.terminals[index] = float(transition.terminal)
        self.cursor = (self.cursor + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if batch_size <= 0:
            raise ValueError('Batch size must be a positive integer.')
        if self.size < batch_size:
            raise InsufficientBufferError(f'Buffer holds {self.size} transitions, batch needs {batch_size}.')
        return rng.integers(0, self.size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        """Uniform sample with replacement, returned as stacked arrays."""
        indices = self.sample_indices(batch_size, rng)
        return {
            'states': self.states[indices],
            'actions': self.actions[indices],
            'rewards': self.rewards[indices],
            'next_states': self.next_states[indices],
            'dones': self.dones[indices],
            'terminals': self.terminals[indices],
        }
