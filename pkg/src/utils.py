"""Numeric helpers shared across the pipeline."""

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence

import numpy as np

WORKERS_ENV_VAR = 'SWINGUP_WORKERS'


def wrap_angle(angle: float) -> float:
    """Map an angle to the half-open interval (-pi, pi]."""
    wrapped = float(np.mod(angle + np.pi, 2.0 * np.pi) - np.pi)
    if wrapped <= -np.pi:
        wrapped += 2.0 * np.pi
    return wrapped


def derive_seed(seed: int, *keys: int) -> int:
    """Derive an independent 32-bit seed from a root seed and a path of integer keys.

    The result only depends on (seed, keys), so work items seeded this way give the same
    numbers whether they run serially or in a worker pool.
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Return a PCG64 generator for a derived seed."""
    return np.random.default_rng(derive_seed(seed, *keys))


def resolve_workers(requested: Optional[int] = None) -> int:
    """Worker count: explicit value, then the environment override, then 1."""
    if requested is not None:
        if requested <= 0:
            raise ValueError('Worker count must be a positive integer.')
        return requested

    raw = os.environ.get(WORKERS_ENV_VAR)
    if not raw:
        return 1
    try:
        workers = int(raw)
    except ValueError as ex:
        raise ValueError(f'{WORKERS_ENV_VAR} must be an integer, got {raw!r}.') from ex
    if workers <= 0:
        raise ValueError(f'{WORKERS_ENV_VAR} must be a positive integer.')
    return workers


def parallel_map(fn: Callable, items: Sequence, workers: int = 1) -> List:
    """Map fn over items, in a process pool when workers > 1. Results keep the input order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
