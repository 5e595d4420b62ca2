"""Regenerate the golden-file fixtures in tests/fixtures/golden/.

    python tests/make_golden.py

Only rerun this when a change to the dynamics, reward or scoring is intended; the regression
test compares fresh output against these files.

The reference policy is a two-unit ReLU network with hand-set weights. Its mean action is
a * (1 + cos t1) + b * sin t1 - d * w1: a constant push away from hanging rest, a restoring
term about upright and damping on the shoulder. On the near-single-link pendubot below it lifts
link 1 in about 0.3 s and holds it, so both archived scores are non-zero.
"""

import sys
from dataclasses import replace
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

import numpy as np  # noqa: E402

from src.approximator import OMEGA_SCALE, Activation, flatten, policy_architecture  # noqa: E402
from src.checkpoint import PolicyCheckpoint, save_checkpoint  # noqa: E402
from src.dynamics import ModelParams, Setting  # noqa: E402
from src.perturbations import PerturbationCategory  # noqa: E402
from src.plotting import plot_trajectory  # noqa: E402
from src.reward import RewardConfig  # noqa: E402
from src.sac import GreedyControllerFactory  # noqa: E402
from src.scoring import PerturbationSpec, ScoreCriteria, evaluate, save_report  # noqa: E402
from src.trajectory import write_csv  # noqa: E402

GOLDEN_DIR = ROOT / 'tests' / 'fixtures' / 'golden'
CHECKPOINT = 'reference.ckpt'
TRAJECTORY = 'trajectory.csv'
REPORT = 'report.json'
PLOT = 'trajectory.png'
FIXTURES = (CHECKPOINT, TRAJECTORY, REPORT, PLOT)
SEED = 11

PUSH_GAIN = 0.5
UPRIGHT_GAIN = 1.0
DAMPING_GAIN = 0.15
# Lowest tip height with link 1 upright and the light link 2 hanging is 0.25 m.
HEIGHT_THRESHOLD = 0.2


def reference_specs():
    return [
        PerturbationSpec(PerturbationCategory.TORQUE_NOISE, (0.0, 0.1), trials=1),
        PerturbationSpec(PerturbationCategory.TORQUE_DELAY, (0.0, 0.01), trials=1),
    ]


def reference_setup():
    base = ModelParams.defaults(Setting.PENDUBOT)
    params = replace(base, m2=0.01, l2=0.05, r2=0.025, I2=0.01 * 0.05 ** 2 / 3.0)
    criteria = replace(ScoreCriteria.defaults(Setting.PENDUBOT), height_threshold=HEIGHT_THRESHOLD)
    reward_cfg = replace(RewardConfig.for_setting(Setting.PENDUBOT), y_th=HEIGHT_THRESHOLD)
    return params, criteria, reward_cfg


def reference_checkpoint() -> PolicyCheckpoint:
    arch = policy_architecture((2,), Activation.RELU)
    gains = np.array([PUSH_GAIN, UPRIGHT_GAIN, 0.0, 0.0, -DAMPING_GAIN * OMEGA_SCALE, 0.0])
    hidden = (np.stack([gains, -gains]), np.array([PUSH_GAIN, -PUSH_GAIN]))
    # mean = relu(z) - relu(-z) = z, constant log_std of -1.
    output = (np.array([[1.0, -1.0], [0.0, 0.0]]), np.array([0.0, -1.0]))
    return PolicyCheckpoint(policy_arch=arch, policy_params=flatten([hidden, output]), seed=SEED,
                            metadata={'stage': 'reference'})


def reference_evaluation(checkpoint: PolicyCheckpoint):
    params, criteria, reward_cfg = reference_setup()
    factory = GreedyControllerFactory(checkpoint.policy_arch, checkpoint.policy_params)
    return evaluate(factory, params, criteria, reward_cfg, specs=reference_specs(), seed=SEED)


def main() -> None:
    checkpoint = reference_checkpoint()
    report, traj = reference_evaluation(checkpoint)
    if report.performance <= 0.0:
        raise RuntimeError('Reference policy failed the nominal swing-up; fixtures not written.')

    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    save_checkpoint(checkpoint, str(GOLDEN_DIR / CHECKPOINT))
    save_report(report, str(GOLDEN_DIR / REPORT))
    write_csv(traj, str(GOLDEN_DIR / TRAJECTORY))
    plot_trajectory(traj, str(GOLDEN_DIR / PLOT), title='reference')
    print(f'Golden fixtures written to {GOLDEN_DIR} '
          f'(performance {report.performance:.3f}, robustness {report.robustness:.3f})')


if __name__ == '__main__':
    main()
