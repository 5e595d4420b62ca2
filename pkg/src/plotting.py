"""Static PNG figures for trajectories and robustness sweeps."""

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .scoring import ScoreReport  # noqa: E402
from .trajectory import Trajectory  # noqa: E402

FIGSIZE = (10.0, 8.0)
DPI = 100


def plot_trajectory(traj: Trajectory, path: str, title: str = '') -> None:
    """Joint angles, joint velocities and motor torques against time, one panel each."""
    fig, axes = plt.subplots(3, 1, figsize=FIGSIZE, dpi=DPI, sharex=True)
    panels = (
        (traj.states[:, 0:2], ('theta1', 'theta2'), 'angle [rad]'),
        (traj.states[:, 2:4], ('omega1', 'omega2'), 'velocity [rad/s]'),
        (traj.torques, ('tau1', 'tau2'), 'torque [N m]'),
    )
    for ax, (values, labels, ylabel) in zip(axes, panels):
        for column, label in enumerate(labels):
            ax.plot(traj.times, values[:, column], label=label, linewidth=1.0)
        ax.set_ylabel(ylabel)
        ax.legend(loc='upper right')
        ax.grid(True, linewidth=0.3)
    axes[0].axhline(y=np.pi, color='r', linestyle='--', linewidth=0.8)
    axes[0].axhline(y=-np.pi, color='r', linestyle='--', linewidth=0.8)
    axes[-1].set_xlabel('time [s]')
    if title:
        axes[0].set_title(title)
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def plot_robustness(report: ScoreReport, path: str, title: str = '') -> None:
    """Grouped bars: one group per perturbation category, one bar per magnitude (pass rate)."""
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    keys = list(report.pass_rates)
    widest = max((len(curve) for curve in report.pass_rates.values()), default=1)
    width = 0.8 / widest
    for group, key in enumerate(keys):
        for index, (magnitude, rate) in enumerate(report.pass_rates[key]):
            x = group - 0.4 + width * (index + 0.5)
            ax.bar(x, rate, width=width * 0.9, color=plt.cm.viridis(index / max(widest - 1, 1)))
            ax.text(x, rate + 0.02, f'{magnitude:g}', ha='center', fontsize=7)
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys, rotation=15)
    ax.set_ylim(0.0, 1.15)
    ax.set_ylabel('pass rate')
    robustness = '-' if report.robustness is None else f'{report.robustness:.3f}'
    ax.set_title(title or f'Robustness {robustness} ({report.setting})')
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
