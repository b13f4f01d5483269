"""
Experiment configuration files
Flat key=value text with dotted section keys, parsed with python-dotenv:

    seed=7
    source1.kind=uniform
    optimizer.learning_rate=0.01
"""

import logging
from dataclasses import replace
from pathlib import Path
from typing import Callable, Optional

from dotenv import dotenv_values

from src.exceptions import ConfigError
from src.models import (
    PARAM_NAMES, DistributionKind, ExperimentConfig, GradientVariant, ScoreMode,
)
from src.separation.scores import analytic_score_for

logger = logging.getLogger(__name__)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ('true', '1', 'yes'):
        return True
    if lowered in ('false', '0', 'no'):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _field_types() -> dict[str, tuple[str, str, Callable]]:
    """dotted key -> (section, field, converter)"""
    table = {
        'seed': ('experiment', 'seed', int),
        'n_samples': ('experiment', 'n_samples', int),
        'output_dir': ('experiment', 'output_dir', Path),
        'recurrence.max_iterations': ('recurrence', 'max_iterations', int),
        'recurrence.tolerance': ('recurrence', 'tolerance', float),
        'recurrence.divergence_bound': ('recurrence', 'divergence_bound', float),
        'optimizer.learning_rate': ('optimizer', 'learning_rate', float),
        'optimizer.max_epochs': ('optimizer', 'max_epochs', int),
        'optimizer.gradient_norm_tolerance': ('optimizer', 'gradient_norm_tolerance', float),
        'optimizer.gradient': ('optimizer', 'gradient_variant', GradientVariant),
        'optimizer.scores': ('optimizer', 'score_mode', ScoreMode),
        'optimizer.refit_every': ('optimizer', 'refit_every', int),
        'optimizer.halve_on_decrease': ('optimizer', 'halve_on_decrease', _parse_bool),
        'optimizer.bandwidth': ('optimizer', 'bandwidth', float),
        'optimizer.max_step': ('optimizer', 'max_step', float),
        'gradcheck.n_configs': ('gradcheck', 'n_configs', int),
        'gradcheck.n_samples': ('gradcheck', 'n_samples', int),
        'gradcheck.step': ('gradcheck', 'step', float),
        'gradcheck.tolerance': ('gradcheck', 'tolerance', float),
        'gradcheck.linear_only': ('gradcheck', 'linear_only', _parse_bool),
    }
    for source in ('source1', 'source2'):
        table[f'{source}.kind'] = (source, 'kind', DistributionKind)
        for name in ('low', 'high', 'mean', 'std', 'scale'):
            table[f'{source}.{name}'] = (source, name, float)
    for name in PARAM_NAMES:
        table[f'mixing.{name}'] = ('mixing', name, float)
        table[f'optimizer.initial.{name}'] = ('initial', name, float)
    return table


FIELD_TYPES = _field_types()


def _line_numbers(path: Path) -> dict[str, str]:
    numbers = {}
    for number, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if stripped and not stripped.startswith('#'):
            key = stripped.split('=', 1)[0].strip()
            if key.startswith('export '):
                key = key[len('export '):].strip()
            numbers.setdefault(key, f"line {number}")
    return numbers


def _section_error(section: str, keys: dict, lines: dict, error: Exception) -> ConfigError:
    where = ", ".join(f"{k} ({lines.get(k, 'unknown line')})" for k in keys) or section
    return ConfigError(f"invalid {section} settings from {where}: {error}")


def build_experiment_config(
    values: dict,
    base: Optional[ExperimentConfig] = None,
    lines: Optional[dict] = None,
) -> ExperimentConfig:
    """Apply dotted key/value strings on top of base"""
    base = base or ExperimentConfig()
    lines = lines or {}
    sections: dict[str, dict] = {}
    keys: dict[str, dict] = {}

    for key, raw in values.items():
        where = lines.get(key, 'unknown line')
        if key not in FIELD_TYPES:
            raise ConfigError(f"unknown key '{key}' ({where})")
        if raw is None:
            raise ConfigError(f"key '{key}' ({where}) has no value")
        section, name, convert = FIELD_TYPES[key]
        try:
            value = convert(raw.strip())
        except ValueError as e:
            raise ConfigError(f"bad value for '{key}' ({where}): {raw!r} ({e})")
        sections.setdefault(section, {})[name] = value
        keys.setdefault(section, {})[key] = value

    def build(section: str, current):
        if section not in sections:
            return current
        try:
            return replace(current, **sections[section])
        except ValueError as e:
            raise _section_error(section, keys[section], lines, e)

    source1 = build('source1', base.source1)
    source2 = build('source2', base.source2)
    w_true = build('mixing', base.w_true)
    recurrence = build('recurrence', base.recurrence)
    gradcheck = build('gradcheck', base.gradcheck)
    initial = build('initial', base.optimizer.initial_params)

    optimizer_fields = dict(sections.get('optimizer', {}))
    optimizer_fields['initial_params'] = initial
    experiment = sections.get('experiment', {})
    mode = optimizer_fields.get('score_mode', base.optimizer.score_mode)
    optimizer_fields['analytic_scores'] = (
        (analytic_score_for(source1), analytic_score_for(source2)) if mode is ScoreMode.ANALYTIC else None
    )
    try:
        optimizer = replace(base.optimizer, **optimizer_fields)
        return replace(
            base,
            source1=source1,
            source2=source2,
            w_true=w_true,
            recurrence=recurrence,
            gradcheck=gradcheck,
            optimizer=optimizer,
            **experiment,
        )
    except ValueError as e:
        involved = {**keys.get('optimizer', {}), **keys.get('experiment', {})}
        raise _section_error('experiment', involved, lines, e)


def load_experiment_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Read an experiment file; errors name the offending key and line"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values = dotenv_values(path, interpolate=False)
    cfg = build_experiment_config(values, base, _line_numbers(path))
    logger.info(f"✓ Loaded {len(values)} setting(s) from {path}")
    return cfg


def apply_overrides(
    cfg: ExperimentConfig,
    seed: Optional[int] = None,
    output_dir: Optional[str] = None,
    gradient: Optional[str] = None,
    scores: Optional[str] = None,
) -> ExperimentConfig:
    """Command-line flags take precedence over the file"""
    values = {}
    if seed is not None:
        values['seed'] = str(seed)
    if output_dir is not None:
        values['output_dir'] = str(output_dir)
    if gradient is not None:
        values['optimizer.gradient'] = gradient
    if scores is not None:
        values['optimizer.scores'] = scores
    if not values:
        return cfg
    return build_experiment_config(values, cfg, {key: 'command line' for key in values})
