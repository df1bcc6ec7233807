"""
Job configuration: INI files with [job], [family] and [options] sections,
validated against the option schema of the requested command.
"""
import logging
from argparse import Namespace
from configparser import ConfigParser, Error as ConfigParserError
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Optional, Union

from ..errors import ConfigError
from ..families import FAMILIES, MapFamily

logger = logging.getLogger(__name__)

SCHEMA_VERSION: int = 1
SECTIONS: tuple[str, ...] = ('job', 'family', 'options')
PRECISIONS: tuple[str, ...] = ('double', 'extended')


# Value parsers

def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(';', ',').split(',') if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(';', ',').split(',') if v.strip())


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"not a boolean: '{text}'")


def _strs(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(',') if v.strip())


PARSERS: dict[str, Callable[[str], Any]] = {
    'int': int,
    'float': float,
    'str': str.strip,
    'bool': _bool,
    'floats': _floats,
    'ints': _ints,
    'strs': _strs,
}


@dataclass(frozen=True)
class Option:
    kind: str
    default: Any = None
    help: str = ''

    def parse(self, text: str) -> Any:
        return PARSERS[self.kind](text)


Schema = dict[str, Option]


# Family construction

FAMILY_KEYS: dict[str, Schema] = {
    'henon2': {'a': Option('float', 2.0), 'b': Option('float', 0.0)},
    'henonND': {'a': Option('float', 2.0), 'b': Option('float', 0.0), 'm': Option('int', 3)},
    'quadHenonLike': {'a': Option('float', 2.0), 'b': Option('float', 0.0), 'tau': Option('float', 0.0)},
    'linear': {'diag': Option('floats', (0.5, 2.0))},
}


def make_family(name: str, values: dict[str, Any]) -> MapFamily:
    if name not in FAMILIES:
        raise ConfigError(f"Unknown family '{name}'; choose from {tuple(FAMILIES)}!")
    if name == 'linear':
        return FAMILIES[name](*values['diag'])
    return FAMILIES[name](**values)


@dataclass(frozen=True)
class JobConfig:
    command: str
    family: str
    family_values: dict[str, Any]
    options: dict[str, Any]
    out: Optional[str] = None
    precision: str = 'double'
    threads: int = 1
    seed: int = 0
    schema: int = SCHEMA_VERSION

    def make_family(self) -> MapFamily:
        return make_family(self.family, self.family_values)

    def __getitem__(self, key: str) -> Any:
        return self.options[key]

    def as_dict(self) -> dict:
        """
        The config as embedded in JSON artifacts; out is left out so that
        artifacts do not depend on where they were written.
        """
        return {
            'schema': self.schema,
            'command': self.command,
            'precision': self.precision,
            'threads': self.threads,
            'seed': self.seed,
            'family': {'name': self.family, **{k: _plain(v) for k, v in self.family_values.items()}},
            'options': {k: _plain(v) for k, v in self.options.items()},
        }

    def with_overrides(self, namespace: Namespace) -> 'JobConfig':
        """
        Applies CLI flags (--out, --precision, --threads, --seed) that were
        given.
        """
        changes: dict[str, Any] = {}
        for key in ('out', 'precision', 'threads', 'seed'):
            value = getattr(namespace, key, None)
            if value is not None:
                changes[key] = str(value) if key == 'out' else value
        config = replace(self, **changes)
        _check_job(config)
        return config


def _plain(value: Any) -> Any:
    return list(value) if isinstance(value, tuple) else value


def _check_job(config: JobConfig) -> None:
    if config.schema != SCHEMA_VERSION:
        raise ConfigError(f"Unsupported schema version {config.schema}; expected {SCHEMA_VERSION}!")
    if config.precision not in PRECISIONS:
        raise ConfigError(f"precision must be one of {PRECISIONS}, got '{config.precision}'!")
    if config.threads < 1:
        raise ConfigError(f"threads must be >= 1, got {config.threads}!")


def _parse_section(
    section: dict[str, str],
    schema: Schema,
    where: str,
) -> dict[str, Any]:
    unknown = sorted(set(section) - set(schema))
    if unknown:
        raise ConfigError(f"Unknown keys in [{where}]: {unknown}; allowed: {sorted(schema)}!")
    values: dict[str, Any] = {}
    for key, option in schema.items():
        if key in section:
            try:
                values[key] = option.parse(section[key])
            except ValueError as e:
                raise ConfigError(f"[{where}] {key} = '{section[key]}' is not a valid {option.kind}: {e}")
        else:
            values[key] = option.default
        if 'tol' in key and values[key] is not None and not values[key] > 0:
            raise ConfigError(f"[{where}] {key} must be positive, got {values[key]}!")
    return values


def parse_config(text: str, schemas: dict[str, Schema]) -> JobConfig:
    """
    Parses INI text; schemas maps command names to their option schema.
    """
    parser = ConfigParser(interpolation=None, inline_comment_prefixes=('#', ';'))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except ConfigParserError as e:
        raise ConfigError(f"Malformed config: {e}")

    unknown = sorted(set(parser.sections()) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"Unknown sections {unknown}; allowed: {list(SECTIONS)}!")
    if not parser.has_section('job'):
        raise ConfigError("Config lacks the [job] section!")

    job = dict(parser['job'])
    job_schema: Schema = {
        'schema': Option('int', None),
        'command': Option('str', None),
        'out': Option('str', None),
        'precision': Option('str', 'double'),
        'threads': Option('int', 1),
        'seed': Option('int', 0),
    }
    job_values = _parse_section(job, job_schema, 'job')
    if job_values['schema'] is None:
        raise ConfigError("[job] schema is required!")
    command = job_values['command']
    if command not in schemas:
        raise ConfigError(f"Unknown command '{command}'; choose from {sorted(schemas)}!")

    family_section = dict(parser['family']) if parser.has_section('family') else {}
    name = family_section.pop('name', 'henon2').strip()
    if name not in FAMILY_KEYS:
        raise ConfigError(f"Unknown family '{name}'; choose from {sorted(FAMILY_KEYS)}!")
    family_values = _parse_section(family_section, FAMILY_KEYS[name], 'family')

    options_section = dict(parser['options']) if parser.has_section('options') else {}
    options = _parse_section(options_section, schemas[command], 'options')

    config = JobConfig(
        command = command,
        family = name,
        family_values = family_values,
        options = options,
        out = job_values['out'],
        precision = job_values['precision'],
        threads = job_values['threads'],
        seed = job_values['seed'],
        schema = job_values['schema'],
    )
    _check_job(config)
    return config


def load_config(path: Union[str, Path], schemas: dict[str, Schema]) -> JobConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config '{path}' does not exist!")
    return parse_config(path.read_text(encoding='utf-8'), schemas)
