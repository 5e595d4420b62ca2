"""Policy checkpoint files.

Byte layout:

    line 1   b'SWINGUP-CHECKPOINT 1\\n'
    line 2   one JSON object (sorted keys, no embedded newlines) followed by b'\\n'
    rest     the payload: every parameter section concatenated, little-endian float64

The JSON header lists the sections in payload order (name, architecture, offset, count), the RNG
seed, free-form metadata and the SHA-256 of the payload. No wall-clock data is stored, so two runs
with the same seed write identical files.
"""

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np

from .approximator import MlpArchitecture

MAGIC = b'SWINGUP-CHECKPOINT 1\n'
PAYLOAD_DTYPE = np.dtype('<f8')


class CheckpointError(ValueError):
    """Raised for unreadable, corrupt or mismatching checkpoint files."""


@dataclass(frozen=True, eq=False)
class PolicyCheckpoint:
    policy_arch: MlpArchitecture
    policy_params: np.ndarray
    q_arch: Optional[MlpArchitecture] = None
    q1_params: Optional[np.ndarray] = None
    q2_params: Optional[np.ndarray] = None
    seed: int = 0
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        _check_section('policy', self.policy_arch, self.policy_params)
        if (self.q1_params is None) != (self.q2_params is None):
            raise CheckpointError('Both Q-networks must be present or both absent.')
        if self.q1_params is not None:
            if self.q_arch is None:
                raise CheckpointError('Q-network parameters given without an architecture.')
            _check_section('q1', self.q_arch, self.q1_params)
            _check_section('q2', self.q_arch, self.q2_params)

    @property
    def has_critics(self) -> bool:
        return self.q1_params is not None

    def with_policy_params(self, params: np.ndarray, **metadata) -> 'PolicyCheckpoint':
        merged = dict(self.metadata)
        merged.update(metadata)
        return replace(self, policy_params=np.array(params, dtype=np.float64), metadata=merged)

    def policy_only(self) -> 'PolicyCheckpoint':
        return replace(self, q_arch=None, q1_params=None, q2_params=None)

    def _sections(self):
        yield 'policy', self.policy_arch, self.policy_params
        if self.has_critics:
            yield 'q1', self.q_arch, self.q1_params
            yield 'q2', self.q_arch, self.q2_params


def _check_section(name: str, arch: MlpArchitecture, params: np.ndarray) -> None:
    values = np.asarray(params)
    if values.ndim != 1 or values.size != arch.param_count:
        raise CheckpointError(f'Section {name}: expected {arch.param_count} parameters, got shape {values.shape}.')
    if not np.all(np.isfinite(values)):
        raise CheckpointError(f'Section {name} contains non-finite parameters.')


def to_bytes(checkpoint: PolicyCheckpoint) -> bytes:
    sections = []
    payload_parts = []
    offset = 0
    for name, arch, params in checkpoint._sections():
        values = np.asarray(params, dtype=PAYLOAD_DTYPE)
        sections.append({'name': name, 'architecture': arch.to_dict(), 'offset': offset, 'count': int(values.size)})
        payload_parts.append(values.tobytes())
        offset += int(values.size)

    payload = b''.join(payload_parts)
    header = {
        'dtype': PAYLOAD_DTYPE.str,
        'metadata': checkpoint.metadata,
        'payload_sha256': hashlib.sha256(payload).hexdigest(),
        'sections': sections,
        'seed': int(checkpoint.seed),
    }
    header_line = json.dumps(header, sort_keys=True, separators=(',', ':')).encode('utf-8') + b'\n'
    return MAGIC + header_line + payload


def from_bytes(data: bytes) -> PolicyCheckpoint:
    if not data.startswith(MAGIC):
        raise CheckpointError('Not a checkpoint file (bad magic line).')
    header_end = data.find(b'\n', len(MAGIC))
    if header_end < 0:
        raise CheckpointError('Checkpoint header is truncated.')
    try:
        header = json.loads(data[len(MAGIC):header_end].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as ex:
        raise CheckpointError(f'Checkpoint header is not valid JSON: {ex}') from ex

    payload = data[header_end + 1:]
    if hashlib.sha256(payload).hexdigest() != header.get('payload_sha256'):
        raise CheckpointError('Checkpoint checksum mismatch: the parameter payload is corrupt.')
    if header.get('dtype') != PAYLOAD_DTYPE.str or len(payload) % PAYLOAD_DTYPE.itemsize:
        raise CheckpointError('Checkpoint payload has an unsupported layout.')

    values = np.frombuffer(payload, dtype=PAYLOAD_DTYPE).astype(np.float64)
    arrays = {}
    archs = {}
    for section in header['sections']:
        start, count = section['offset'], section['count']
        if start + count > values.size:
            raise CheckpointError(f'Section {section["name"]} runs past the end of the payload.')
        archs[section['name']] = MlpArchitecture.from_dict(section['architecture'])
        arrays[section['name']] = values[start:start + count].copy()

    if 'policy' not in arrays:
        raise CheckpointError('Checkpoint has no policy section.')
    return PolicyCheckpoint(
        policy_arch=archs['policy'],
        policy_params=arrays['policy'],
        q_arch=archs.get('q1'),
        q1_params=arrays.get('q1'),
        q2_params=arrays.get('q2'),
        seed=header['seed'],
        metadata=header['metadata'],
    )


def save_checkpoint(checkpoint: PolicyCheckpoint, path: str) -> None:
    with open(path, 'wb') as handle:
        handle.write(to_bytes(checkpoint))


def load_checkpoint(path: str) -> PolicyCheckpoint:
    try:
        with open(path, 'rb') as handle:
            data = handle.read()
    except OSError as ex:
        raise CheckpointError(f'Unable to read checkpoint {path}: {ex}') from ex
    return from_bytes(data)


def check_policy_architecture(checkpoint: PolicyCheckpoint, expected: MlpArchitecture) -> None:
    if checkpoint.policy_arch != expected:
        raise CheckpointError(
            f'Checkpoint policy architecture {checkpoint.policy_arch.to_dict()} does not match '
            f'the configured {expected.to_dict()}.'
        )
