import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np
from PIL import Image

from definitions import ROOT_DIR
from src.checkpoint import load_checkpoint
from src.plotting import plot_trajectory
from src.scoring import load_report
from src.trajectory import read_csv, write_csv

sys.path.insert(0, str(ROOT_DIR / 'tests'))
from make_golden import (  # noqa: E402
    CHECKPOINT,
    FIXTURES,
    GOLDEN_DIR,
    PLOT,
    REPORT,
    TRAJECTORY,
    reference_checkpoint,
    reference_evaluation,
)


class ReferencePolicyTest(unittest.TestCase):
    def test_reference_policy_swings_up(self) -> None:
        report, traj = reference_evaluation(reference_checkpoint())
        assert report.breakdown['success']
        self.assertGreater(report.performance, 0.5)
        self.assertEqual(report.robustness, 1.0)
        self.assertLess(report.breakdown['metrics']['swingup_time'], 1.0)
        self.assertEqual(len(traj), 5001)


class GoldenFileTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        missing = [name for name in FIXTURES if not (GOLDEN_DIR / name).is_file()]
        if missing:
            raise AssertionError(f'Golden fixtures missing ({", ".join(missing)}); run python tests/make_golden.py')
        cls.checkpoint = load_checkpoint(str(GOLDEN_DIR / CHECKPOINT))
        cls.report, cls.traj = reference_evaluation(cls.checkpoint)

    def test_archived_checkpoint_is_the_reference_policy(self) -> None:
        expected = reference_checkpoint()
        self.assertEqual(self.checkpoint.policy_arch, expected.policy_arch)
        np.testing.assert_array_equal(self.checkpoint.policy_params, expected.policy_params)

    def test_trajectory_is_bit_exact(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / TRAJECTORY
            write_csv(self.traj, str(path))
            self.assertEqual(path.read_bytes(), (GOLDEN_DIR / TRAJECTORY).read_bytes())

    def test_scores_match_archive(self) -> None:
        archived = load_report(str(GOLDEN_DIR / REPORT))
        self.assertGreater(archived.performance, 0.0)
        self.assertAlmostEqual(self.report.performance, archived.performance, delta=0.05)
        self.assertAlmostEqual(self.report.robustness, archived.robustness, delta=0.05)
        self.assertEqual(set(self.report.category_scores), set(archived.category_scores))

    def test_plot_matches_archived_dimensions(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / PLOT
            plot_trajectory(read_csv(str(GOLDEN_DIR / TRAJECTORY)), str(path), title='reference')
            with Image.open(path) as fresh, Image.open(GOLDEN_DIR / PLOT) as archived:
                self.assertEqual(fresh.size, archived.size)
                self.assertEqual(fresh.mode, archived.mode)
