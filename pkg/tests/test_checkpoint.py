import tempfile
import unittest
from pathlib import Path

import numpy as np

from src.approximator import init_params, policy_architecture, q_architecture
from src.checkpoint import (
    MAGIC,
    CheckpointError,
    PolicyCheckpoint,
    check_policy_architecture,
    from_bytes,
    load_checkpoint,
    save_checkpoint,
    to_bytes,
)


def make_checkpoint(seed: int = 0, critics: bool = True) -> PolicyCheckpoint:
    rng = np.random.default_rng(seed)
    policy_arch = policy_architecture((8, 8))
    q_arch = q_architecture((8, 8))
    return PolicyCheckpoint(
        policy_arch=policy_arch,
        policy_params=init_params(policy_arch, rng),
        q_arch=q_arch if critics else None,
        q1_params=init_params(q_arch, rng) if critics else None,
        q2_params=init_params(q_arch, rng) if critics else None,
        seed=seed,
        metadata={'stage': 'sac', 'step': 100},
    )


class CheckpointFileTest(unittest.TestCase):
    def test_save_and_load(self) -> None:
        checkpoint = make_checkpoint(3)
        with tempfile.TemporaryDirectory() as tmp:
            path = str(Path(tmp) / 'policy.ckpt')
            save_checkpoint(checkpoint, path)
            loaded = load_checkpoint(path)

        self.assertEqual(loaded.policy_arch, checkpoint.policy_arch)
        self.assertEqual(loaded.q_arch, checkpoint.q_arch)
        np.testing.assert_array_equal(loaded.policy_params, checkpoint.policy_params)
        np.testing.assert_array_equal(loaded.q1_params, checkpoint.q1_params)
        np.testing.assert_array_equal(loaded.q2_params, checkpoint.q2_params)
        self.assertEqual(loaded.seed, 3)
        self.assertEqual(loaded.metadata, {'stage': 'sac', 'step': 100})

    def test_bytes_are_deterministic(self) -> None:
        data = to_bytes(make_checkpoint(1))
        self.assertEqual(data, to_bytes(make_checkpoint(1)))
        assert data.startswith(MAGIC)
        self.assertNotEqual(data, to_bytes(make_checkpoint(2)))

    def test_corrupt_payload_fails_checksum(self) -> None:
        data = bytearray(to_bytes(make_checkpoint()))
        data[-3] ^= 0xFF
        with self.assertRaisesRegex(CheckpointError, 'checksum'):
            from_bytes(bytes(data))

    def test_bad_magic_and_truncated_header(self) -> None:
        with self.assertRaises(CheckpointError):
            from_bytes(b'not a checkpoint\n{}')
        with self.assertRaises(CheckpointError):
            from_bytes(MAGIC + b'{"sections": []')
        with self.assertRaises(CheckpointError):
            load_checkpoint('/nonexistent/policy.ckpt')

    def test_policy_only_and_metadata_merge(self) -> None:
        checkpoint = make_checkpoint()
        bare = checkpoint.policy_only()
        assert checkpoint.has_critics and not bare.has_critics
        restored = from_bytes(to_bytes(bare))
        self.assertIsNone(restored.q1_params)

        evolved = checkpoint.with_policy_params(np.zeros(checkpoint.policy_arch.param_count), stage='snes')
        self.assertEqual(evolved.metadata, {'stage': 'snes', 'step': 100})
        self.assertEqual(checkpoint.metadata['stage'], 'sac')
        np.testing.assert_array_equal(evolved.q1_params, checkpoint.q1_params)

    def test_invalid_sections(self) -> None:
        arch = policy_architecture((4,))
        with self.assertRaises(CheckpointError):
            PolicyCheckpoint(policy_arch=arch, policy_params=np.zeros(arch.param_count - 1))
        with self.assertRaises(CheckpointError):
            PolicyCheckpoint(policy_arch=arch, policy_params=np.full(arch.param_count, np.nan))
        with self.assertRaises(CheckpointError):
            PolicyCheckpoint(policy_arch=arch, policy_params=np.zeros(arch.param_count),
                             q_arch=q_architecture((4,)), q1_params=np.zeros(q_architecture((4,)).param_count))

    def test_architecture_mismatch(self) -> None:
        checkpoint = make_checkpoint()
        check_policy_architecture(checkpoint, policy_architecture((8, 8)))
        with self.assertRaisesRegex(CheckpointError, 'does not match'):
            check_policy_architecture(checkpoint, policy_architecture((256, 256)))
