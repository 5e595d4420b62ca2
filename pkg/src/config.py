"""Experiment configuration files.

A config is one JSON object with the sections run, model, reward, sac, snes and scoring. Every
key is required and unknown keys are rejected; errors name the dotted key path and the line it
sits on (the enclosing section's line for a missing key).
"""

import json
import re
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, List, Sequence

from .approximator import Activation
from .dynamics import ModelParams, Setting
from .perturbations import PerturbationCategory
from .reward import RewardConfig
from .sac import SacConfig
from .scoring import PerturbationSpec, ScoreCriteria
from .snes import SnesConfig

SECTIONS = ('run', 'model', 'reward', 'sac', 'snes', 'scoring')
RUN_KEYS = ('seed', 'output_dir', 'setting')
SCORING_KEYS = ('criteria', 'perturbations')
CRITERIA_KEYS = ('weights', 'normalizers', 'height_threshold', 'success_window')
PERTURBATION_KEYS = ('category', 'magnitudes', 'trials', 'parameter')


class ConfigError(ValueError):
    """Raised for malformed or invalid experiment configs."""


@dataclass(frozen=True)
class RunConfig:
    seed: int
    output_dir: str
    setting: Setting


@dataclass(frozen=True)
class ExperimentConfig:
    run: RunConfig
    model: ModelParams
    reward: RewardConfig
    sac: SacConfig
    snes: SnesConfig
    criteria: ScoreCriteria
    perturbations: List[PerturbationSpec]

    @property
    def setting(self) -> Setting:
        return self.run.setting

    def with_seed(self, seed: int) -> 'ExperimentConfig':
        return replace(self, run=replace(self.run, seed=seed), snes=replace(self.snes, seed=seed))

    def with_output_dir(self, output_dir: str) -> 'ExperimentConfig':
        return replace(self, run=replace(self.run, output_dir=output_dir))

    def with_tau_max(self, tau_max: float) -> 'ExperimentConfig':
        try:
            return replace(self, model=replace(self.model, tau_max=tau_max))
        except ValueError as ex:
            raise ConfigError(f'--tau-max: {ex}') from ex


class _Source:
    """Raw config text, used to point error messages at a line."""

    def __init__(self, text: str, name: str):
        self.text = text
        self.name = name

    def line_of(self, path: Sequence[str]) -> int:
        position = 0
        for key in path:
            if key.isdigit():
                continue
            match = re.compile(r'"%s"\s*:' % re.escape(key)).search(self.text, position)
            if match is None:
                break
            position = match.start()
        return self.text.count('\n', 0, position) + 1

    def error(self, path: Sequence[str], message: str) -> ConfigError:
        dotted = '.'.join(path)
        return ConfigError(f'{self.name}:{self.line_of(path)}: {dotted}: {message}')


def _section(source: _Source, data: Any, path: List[str], keys: Sequence[str]) -> Dict:
    if not isinstance(data, dict):
        raise source.error(path, 'expected an object.')
    for key in data:
        if key not in keys:
            raise source.error(path + [key], 'unknown key.')
    for key in keys:
        if key not in data:
            raise source.error(path, f'missing key "{key}".')
    return data


def _number(source: _Source, value: Any, path: List[str]) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise source.error(path, f'expected a number, got {value!r}.')
    return float(value)


def _integer(source: _Source, value: Any, path: List[str]) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise source.error(path, f'expected an integer, got {value!r}.')
    return value


def _boolean(source: _Source, value: Any, path: List[str]) -> bool:
    if not isinstance(value, bool):
        raise source.error(path, f'expected true or false, got {value!r}.')
    return value


def _build(source: _Source, path: List[str], factory, **kwargs):
    try:
        return factory(**kwargs)
    except (ValueError, TypeError) as ex:
        raise source.error(path, str(ex)) from ex


def _enum(source: _Source, enum_cls, value: Any, path: List[str]):
    try:
        return enum_cls(value)
    except ValueError as ex:
        allowed = ', '.join(member.value for member in enum_cls)
        raise source.error(path, f'expected one of {allowed}, got {value!r}.') from ex


def _parse_run(source: _Source, data: Any) -> RunConfig:
    section = _section(source, data, ['run'], RUN_KEYS)
    output_dir = section['output_dir']
    if not isinstance(output_dir, str) or not output_dir:
        raise source.error(['run', 'output_dir'], 'expected a non-empty path.')
    return RunConfig(
        seed=_integer(source, section['seed'], ['run', 'seed']),
        output_dir=output_dir,
        setting=_enum(source, Setting, section['setting'], ['run', 'setting']),
    )


def _parse_model(source: _Source, data: Any, setting: Setting) -> ModelParams:
    keys = [f.name for f in fields(ModelParams) if f.name != 'setting']
    section = _section(source, data, ['model'], keys)
    values = {key: _number(source, section[key], ['model', key]) for key in keys}
    return _build(source, ['model'], ModelParams, setting=setting, **values)


def _parse_reward(source: _Source, data: Any) -> RewardConfig:
    keys = [f.name for f in fields(RewardConfig)]
    section = _section(source, data, ['reward'], keys)
    values = {key: _number(source, section[key], ['reward', key]) for key in keys}
    return _build(source, ['reward'], RewardConfig, **values)


def _parse_sac(source: _Source, data: Any) -> SacConfig:
    keys = [f.name for f in fields(SacConfig)]
    section = _section(source, data, ['sac'], keys)
    values = {}
    for key in keys:
        value, path = section[key], ['sac', key]
        if key == 'auto_entropy':
            values[key] = _boolean(source, value, path)
        elif key == 'activation':
            values[key] = _enum(source, Activation, value, path)
        elif key == 'hidden_sizes':
            if not isinstance(value, list) or not value:
                raise source.error(path, 'expected a non-empty list of layer widths.')
            values[key] = tuple(_integer(source, size, path + [str(i)]) for i, size in enumerate(value))
        elif key in ('batch_size', 'buffer_capacity', 'total_steps', 'warmup_steps', 'eval_interval', 'log_interval'):
            values[key] = _integer(source, value, path)
        else:
            values[key] = _number(source, value, path)
    return _build(source, ['sac'], SacConfig, **values)


def _parse_snes(source: _Source, data: Any) -> SnesConfig:
    keys = [f.name for f in fields(SnesConfig)]
    section = _section(source, data, ['snes'], keys)
    values = {}
    for key in keys:
        value, path = section[key], ['snes', key]
        if key == 'final_layer_only':
            values[key] = _boolean(source, value, path)
        elif key in ('population_size', 'generations', 'fitness_repeats', 'seed'):
            values[key] = _integer(source, value, path)
        elif key == 'eta_sigma' and value is None:
            values[key] = None
        else:
            values[key] = _number(source, value, path)
    return _build(source, ['snes'], SnesConfig, **values)


def _parse_table(source: _Source, data: Any, path: List[str]) -> Dict[str, float]:
    if not isinstance(data, dict):
        raise source.error(path, 'expected an object.')
    return {key: _number(source, value, path + [key]) for key, value in data.items()}


def _parse_criteria(source: _Source, data: Any) -> ScoreCriteria:
    path = ['scoring', 'criteria']
    section = _section(source, data, path, CRITERIA_KEYS)
    return _build(
        source, path, ScoreCriteria,
        weights=_parse_table(source, section['weights'], path + ['weights']),
        normalizers=_parse_table(source, section['normalizers'], path + ['normalizers']),
        height_threshold=_number(source, section['height_threshold'], path + ['height_threshold']),
        success_window=_number(source, section['success_window'], path + ['success_window']),
    )


def _parse_perturbations(source: _Source, data: Any) -> List[PerturbationSpec]:
    path = ['scoring', 'perturbations']
    if not isinstance(data, list):
        raise source.error(path, 'expected a list of perturbation specs.')
    specs = []
    for index, entry in enumerate(data):
        entry_path = path + [str(index)]
        section = _section(source, entry, entry_path, PERTURBATION_KEYS)
        magnitudes = section['magnitudes']
        if not isinstance(magnitudes, list):
            raise source.error(entry_path + ['magnitudes'], 'expected a list of numbers.')
        parameter = section['parameter']
        if parameter is not None and not isinstance(parameter, str):
            raise source.error(entry_path + ['parameter'], 'expected a parameter name or null.')
        specs.append(_build(
            source, entry_path, PerturbationSpec,
            category=_enum(source, PerturbationCategory, section['category'], entry_path + ['category']),
            magnitudes=tuple(_number(source, m, entry_path + ['magnitudes']) for m in magnitudes),
            trials=_integer(source, section['trials'], entry_path + ['trials']),
            parameter=parameter,
        ))
    return specs


def parse_config(text: str, name: str = '<config>') -> ExperimentConfig:
    source = _Source(text, name)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as ex:
        raise ConfigError(f'{name}:{ex.lineno}:{ex.colno}: invalid JSON: {ex.msg}') from ex

    root = _section(source, data, [], SECTIONS)
    run = _parse_run(source, root['run'])
    model = _parse_model(source, root['model'], run.setting)
    reward = _parse_reward(source, root['reward'])
    try:
        reward.check_reach(model)
    except ValueError as ex:
        raise source.error(['reward', 'y_th'], str(ex)) from ex
    scoring = _section(source, root['scoring'], ['scoring'], SCORING_KEYS)
    return ExperimentConfig(
        run=run,
        model=model,
        reward=reward,
        sac=_parse_sac(source, root['sac']),
        snes=_parse_snes(source, root['snes']),
        criteria=_parse_criteria(source, scoring['criteria']),
        perturbations=_parse_perturbations(source, scoring['perturbations']),
    )


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            text = handle.read()
    except OSError as ex:
        raise ConfigError(f'Unable to read config {path}: {ex}') from ex
    return parse_config(text, name=str(path))


def config_to_dict(config: ExperimentConfig) -> Dict:
    """Fully explicit JSON form; parse_config(json.dumps(config_to_dict(c))) rebuilds c."""
    model = asdict(config.model)
    model.pop('setting')
    sac = asdict(config.sac)
    sac['hidden_sizes'] = list(config.sac.hidden_sizes)
    sac['activation'] = config.sac.activation.value
    return {
        'run': {'seed': config.run.seed, 'output_dir': config.run.output_dir, 'setting': config.run.setting.value},
        'model': model,
        'reward': asdict(config.reward),
        'sac': sac,
        'snes': asdict(config.snes),
        'scoring': {
            'criteria': {
                'weights': dict(config.criteria.weights),
                'normalizers': dict(config.criteria.normalizers),
                'height_threshold': config.criteria.height_threshold,
                'success_window': config.criteria.success_window,
            },
            'perturbations': [
                {
                    'category': spec.category.value,
                    'magnitudes': list(spec.magnitudes),
                    'trials': spec.trials,
                    'parameter': spec.parameter,
                }
                for spec in config.perturbations
            ],
        },
    }


def write_resolved(config: ExperimentConfig, path: str) -> None:
    with open(path, 'w', encoding='utf-8') as write_file:
        json.dump(config_to_dict(config), write_file, indent=4)
        write_file.write('\n')
