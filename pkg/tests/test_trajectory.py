import tempfile
import unittest
from pathlib import Path

import numpy as np

from src.dynamics import ModelParams, Setting
from src.scoring import run_episode
from src.trajectory import CSV_COLUMNS, Trajectory, TrajectoryFormatError, read_csv, write_csv


class TrajectoryCsvTest(unittest.TestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def _write(self, text: str) -> str:
        path = str(self.dir / 'trajectory.csv')
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text)
        return path

    def test_episode_survives_csv(self) -> None:
        params = ModelParams.defaults(Setting.ACROBOT)
        traj = run_episode(lambda state: 0.7 * np.sin(state.theta2 + 0.3), params, duration=0.5)
        path = str(self.dir / 'episode.csv')
        write_csv(traj, path)

        with open(path, 'r', encoding='utf-8') as handle:
            header = handle.readline().strip()
        self.assertEqual(header, ','.join(CSV_COLUMNS))

        loaded = read_csv(path, params)
        np.testing.assert_array_equal(loaded.states, traj.states)
        np.testing.assert_array_equal(loaded.torques, traj.torques)
        np.testing.assert_array_equal(loaded.rewards, traj.rewards)
        self.assertAlmostEqual(loaded.dt, 0.002)
        self.assertIs(loaded.params, params)

    def test_empty_file(self) -> None:
        with self.assertRaisesRegex(TrajectoryFormatError, 'empty'):
            read_csv(self._write(''))

    def test_header_only(self) -> None:
        with self.assertRaisesRegex(TrajectoryFormatError, 'no data rows'):
            read_csv(self._write(','.join(CSV_COLUMNS) + '\n'))

    def test_wrong_header(self) -> None:
        with self.assertRaisesRegex(TrajectoryFormatError, 'row 1'):
            read_csv(self._write('time,a,b\n0,1,2\n'))

    def test_bad_cell_names_row_and_column(self) -> None:
        rows = [','.join(CSV_COLUMNS), '0,0,0,0,0,0,0,0,0', '0.002,0,0,abc,0,0,0,0,0']
        with self.assertRaisesRegex(TrajectoryFormatError, r'row 3, column omega1'):
            read_csv(self._write('\n'.join(rows) + '\n'))

    def test_short_row(self) -> None:
        rows = [','.join(CSV_COLUMNS), '0,0,0,0,0,0,0,0,0', '0.002,0,0']
        with self.assertRaisesRegex(TrajectoryFormatError, 'row 3: expected 9 columns, got 3'):
            read_csv(self._write('\n'.join(rows) + '\n'))

    def test_non_finite_and_unordered(self) -> None:
        rows = [','.join(CSV_COLUMNS), '0,0,0,0,0,0,0,0,0', '0.002,nan,0,0,0,0,0,0,0']
        with self.assertRaisesRegex(TrajectoryFormatError, 'column theta1: value is not finite'):
            read_csv(self._write('\n'.join(rows) + '\n'))

        rows = [','.join(CSV_COLUMNS), '0,0,0,0,0,0,0,0,0', '0.002,0,0,0,0,0,0,0,0', '0.001,0,0,0,0,0,0,0,0']
        with self.assertRaisesRegex(TrajectoryFormatError, 'row 4, column t'):
            read_csv(self._write('\n'.join(rows) + '\n'))

    def test_shape_validation(self) -> None:
        with self.assertRaises(ValueError):
            Trajectory(times=np.arange(3.0), states=np.zeros((2, 4)), torques=np.zeros((3, 2)),
                       actions=np.zeros(3), rewards=np.zeros(3), dt=1.0)
