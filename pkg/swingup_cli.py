"""CLI entrypoint for training, fine-tuning and evaluating swing-up controllers."""

import argparse
import json
import logging
import os
import sys
from functools import partial
from pathlib import Path
from typing import List, Optional, Sequence

from definitions import CONFIGS_DIR
from src.checkpoint import check_policy_architecture, load_checkpoint, save_checkpoint
from src.config import ConfigError, ExperimentConfig, config_to_dict, load_config, write_resolved
from src.env import make_env_factory
from src.plotting import plot_robustness, plot_trajectory
from src.run_log import JsonLinesWriter
from src.sac import GreedyControllerFactory, train
from src.scoring import comparison_table, evaluate, format_report, load_report, performance_score, save_report
from src.snes import NoisyControllerFactory, finetune
from src.trajectory import read_csv, write_csv
from src.utils import resolve_workers

logger = logging.getLogger('swingup')

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3

RUN_SUBDIRS = ('checkpoints', 'logs', 'reports', 'plots')


class OutputExistsError(ValueError):
    """Raised when a subcommand would overwrite an artifact without --force."""


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', required=True, help='Config file, or the name of a bundled preset.')
    parser.add_argument('--seed', type=int)
    parser.add_argument('--output', help='Run directory (default: run.output_dir from the config).')
    parser.add_argument('--force', action='store_true', help='Overwrite existing artifacts.')
    parser.add_argument('--tau-max', type=float, help='Override the motor torque limit (N*m).')
    parser.add_argument('--workers', type=int, help='Worker processes (default: $SWINGUP_WORKERS or 1).')


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Acrobot and pendubot swing-up with SAC and SNES fine-tuning.')
    parser.add_argument('--verbose', action='store_true')
    subparsers = parser.add_subparsers(dest='command', required=True)

    train_parser = subparsers.add_parser('train', help='Train a SAC policy.')
    _add_config_args(train_parser)

    finetune_parser = subparsers.add_parser('finetune', help='Fine-tune a policy checkpoint with SNES.')
    _add_config_args(finetune_parser)
    finetune_parser.add_argument('--checkpoint', required=True)
    finetune_parser.add_argument('--policy-only', action='store_true',
                                 help='Write snes.ckpt without the critics (evolution never updates them).')

    eval_parser = subparsers.add_parser('eval', help='Score a policy checkpoint.')
    _add_config_args(eval_parser)
    eval_parser.add_argument('--checkpoint', required=True)
    eval_parser.add_argument('--robustness', action='store_true', help='Run the perturbation sweep.')
    eval_parser.add_argument('--noisy', action='store_true',
                             help='Roll out with pre-tanh action noise (snes.robustness_noise_sigma).')
    eval_parser.add_argument('--name', default='report', help='Base name of the report files.')

    plot_parser = subparsers.add_parser('plot', help='Render a trajectory CSV.')
    plot_parser.add_argument('trajectory')
    plot_parser.add_argument('--output', help='PNG path (default: next to the CSV).')
    plot_parser.add_argument('--force', action='store_true')

    compare_parser = subparsers.add_parser('compare', help='Tabulate saved score reports.')
    compare_parser.add_argument('reports', nargs='+')
    compare_parser.add_argument('--names', nargs='+', help='Row labels (default: report file stems).')
    return parser


def _resolve_config_path(value: str) -> str:
    if os.path.isfile(value):
        return value
    preset = CONFIGS_DIR / f'{value}.json'
    if preset.is_file():
        return str(preset)
    raise ConfigError(f'Config not found: {value}')


def _load_experiment(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(_resolve_config_path(args.config))
    if args.seed is not None:
        config = config.with_seed(args.seed)
    if args.output:
        config = config.with_output_dir(args.output)
    if args.tau_max is not None:
        config = config.with_tau_max(args.tau_max)
    return config


def _claim(paths: Sequence[Path], force: bool) -> None:
    existing = [str(path) for path in paths if path.exists()]
    if existing and not force:
        raise OutputExistsError(f'Refusing to overwrite {", ".join(existing)} (use --force).')


def _run_dir(config: ExperimentConfig, outputs: Sequence[str], force: bool) -> Path:
    """Create the run directory layout, claim the given artifacts and snapshot the resolved config."""
    run_dir = Path(config.run.output_dir)
    _claim([run_dir / name for name in outputs], force)

    resolved = run_dir / 'config.resolved'
    if resolved.exists() and not force:
        with open(resolved, 'r', encoding='utf-8') as handle:
            if json.load(handle) != config_to_dict(config):
                raise OutputExistsError(f'{resolved} holds a different config (use --force).')

    for name in RUN_SUBDIRS:
        (run_dir / name).mkdir(parents=True, exist_ok=True)
    write_resolved(config, str(resolved))
    return run_dir


def cmd_train(args: argparse.Namespace) -> None:
    config = _load_experiment(args)
    run_dir = _run_dir(config, ['checkpoints/final.ckpt', 'checkpoints/best.ckpt', 'logs/train.jsonl'], args.force)
    env_factory = make_env_factory(config.model, config.reward, config.sac.control_hz,
                                   config.sac.domain_randomization)

    result = train(env_factory, config.reward, config.model, config.sac, config.run.seed,
                   criteria=config.criteria, log_writer=JsonLinesWriter(str(run_dir / 'logs' / 'train.jsonl')))
    save_checkpoint(result.checkpoint, str(run_dir / 'checkpoints' / 'final.ckpt'))
    save_checkpoint(result.best_checkpoint, str(run_dir / 'checkpoints' / 'best.ckpt'))
    logger.info('Best greedy evaluation: %s', result.best_eval)


def cmd_finetune(args: argparse.Namespace) -> None:
    config = _load_experiment(args)
    checkpoint = load_checkpoint(args.checkpoint)
    check_policy_architecture(checkpoint, config.sac.policy_arch)
    run_dir = _run_dir(config, ['checkpoints/snes.ckpt', 'logs/snes.jsonl'], args.force)

    result = finetune(
        checkpoint,
        config.model,
        partial(performance_score, criteria=config.criteria),
        config.snes,
        reward_cfg=config.reward,
        log_writer=JsonLinesWriter(str(run_dir / 'logs' / 'snes.jsonl')),
        workers=resolve_workers(args.workers),
    )
    evolved = result.checkpoint.policy_only() if args.policy_only else result.checkpoint
    save_checkpoint(evolved, str(run_dir / 'checkpoints' / 'snes.ckpt'))
    logger.info('SNES best fitness %.4f (baseline %.4f).', result.best_fitness, result.baseline_fitness)


def cmd_eval(args: argparse.Namespace) -> None:
    config = _load_experiment(args)
    checkpoint = load_checkpoint(args.checkpoint)
    check_policy_architecture(checkpoint, config.sac.policy_arch)
    name = args.name
    outputs = [f'reports/{name}.json', f'reports/{name}.txt', f'reports/{name}_trajectory.csv',
               f'plots/{name}_trajectory.png']
    if args.robustness:
        outputs.append(f'plots/{name}_robustness.png')
    run_dir = _run_dir(config, outputs, args.force)

    if args.noisy:
        factory = NoisyControllerFactory(checkpoint.policy_arch, checkpoint.policy_params,
                                         config.snes.robustness_noise_sigma)
    else:
        factory = GreedyControllerFactory(checkpoint.policy_arch, checkpoint.policy_params)
    report, traj = evaluate(
        factory,
        config.model,
        config.criteria,
        reward_cfg=config.reward,
        specs=config.perturbations if args.robustness else None,
        seed=config.run.seed,
        workers=resolve_workers(args.workers),
    )

    save_report(report, str(run_dir / 'reports' / f'{name}.json'))
    text = format_report(report)
    with open(run_dir / 'reports' / f'{name}.txt', 'w', encoding='utf-8') as write_file:
        write_file.write(text + '\n')
    write_csv(traj, str(run_dir / 'reports' / f'{name}_trajectory.csv'))
    plot_trajectory(traj, str(run_dir / 'plots' / f'{name}_trajectory.png'), title=f'{config.setting.value} {name}')
    if args.robustness:
        plot_robustness(report, str(run_dir / 'plots' / f'{name}_robustness.png'))
    print(text)


def cmd_plot(args: argparse.Namespace) -> None:
    output = Path(args.output) if args.output else Path(args.trajectory).with_suffix('.png')
    _claim([output], args.force)
    traj = read_csv(args.trajectory)
    plot_trajectory(traj, str(output), title=Path(args.trajectory).stem)


def cmd_compare(args: argparse.Namespace) -> None:
    names = args.names or [Path(path).stem for path in args.reports]
    if len(names) != len(args.reports):
        raise ValueError('--names needs one label per report.')
    print(comparison_table([(name, load_report(path)) for name, path in zip(names, args.reports)]))


COMMANDS = {
    'train': cmd_train,
    'finetune': cmd_finetune,
    'eval': cmd_eval,
    'plot': cmd_plot,
    'compare': cmd_compare,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr)

    try:
        COMMANDS[args.command](args)
    except ConfigError as ex:
        sys.stderr.write(f'config error: {ex}\n')
        return EXIT_CONFIG_ERROR
    except (ValueError, OSError) as ex:
        sys.stderr.write(f'error: {ex}\n')
        return EXIT_RUNTIME_ERROR
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
