from argparse import Namespace

import pytest

from src.cli import SCHEMAS, load_config, make_family, parse_config
from src.errors import ConfigError

ORBIT_JOB = """
[job]
schema = 1
command = orbit
precision = double

[family]
name = henon2
a = 2.0
b = 0.05

[options]
seed_point = -2.0, -2.0
period = 1
"""


def _job(options: str = '', job: str = '', family: str = 'name = henon2') -> str:
    return f"[job]\nschema = 1\ncommand = orbit\n{job}\n[family]\n{family}\n[options]\n{options}\n"


def test_parse_orbit_job():
    config = parse_config(ORBIT_JOB, SCHEMAS)
    assert config.command == 'orbit'
    assert config['seed_point'] == (-2.0, -2.0)
    assert config['tol'] == 1e-10
    assert config.family_values == {'a': 2.0, 'b': 0.05}
    fam = config.make_family()
    assert float(fam.params()['b']) == 0.05


def test_defaults_fill_missing_keys():
    config = parse_config(_job(), SCHEMAS)
    assert config['period'] == 1
    assert config.family_values == {'a': 2.0, 'b': 0.0}
    assert config.threads == 1 and config.precision == 'double'


def test_unknown_option_is_rejected():
    with pytest.raises(ConfigError):
        parse_config(_job('speed = 3'), SCHEMAS)


def test_unknown_family_key_is_rejected():
    with pytest.raises(ConfigError):
        parse_config(_job(family='name = henon2\ntau = 0.1'), SCHEMAS)


def test_nonpositive_tolerance_is_rejected():
    with pytest.raises(ConfigError):
        parse_config(_job('tol = 0'), SCHEMAS)
    with pytest.raises(ConfigError):
        parse_config(_job('tol = -1e-8'), SCHEMAS)


def test_bad_values_are_rejected():
    with pytest.raises(ConfigError):
        parse_config(_job('period = two'), SCHEMAS)
    with pytest.raises(ConfigError):
        parse_config(_job(job='precision = quad'), SCHEMAS)
    with pytest.raises(ConfigError):
        parse_config(_job(job='threads = 0'), SCHEMAS)


def test_schema_and_command_are_required():
    with pytest.raises(ConfigError):
        parse_config("[job]\ncommand = orbit\n", SCHEMAS)
    with pytest.raises(ConfigError):
        parse_config("[job]\nschema = 2\ncommand = orbit\n", SCHEMAS)
    with pytest.raises(ConfigError):
        parse_config("[job]\nschema = 1\ncommand = fly\n", SCHEMAS)


def test_malformed_text_and_sections():
    with pytest.raises(ConfigError):
        parse_config("this is not an ini file", SCHEMAS)
    with pytest.raises(ConfigError):
        parse_config(_job() + "[extras]\nx = 1\n", SCHEMAS)


def test_cli_flags_override_job_section():
    config = parse_config(_job(job='threads = 2'), SCHEMAS)
    namespace = Namespace(out='results', precision='extended', threads=None, seed=7)
    changed = config.with_overrides(namespace)
    assert changed.out == 'results'
    assert changed.precision == 'extended'
    assert changed.threads == 2
    assert changed.seed == 7


def test_embedded_config_leaves_out_output_path():
    config = parse_config(_job(job='out = somewhere'), SCHEMAS)
    document = config.as_dict()
    assert 'out' not in document
    assert document['family'] == {'name': 'henon2', 'a': 2.0, 'b': 0.0}
    assert document['options']['seed_point'] == [-2.0, -2.0]


def test_load_config_from_file(tmp_path):
    path = tmp_path / 'job.ini'
    path.write_text(ORBIT_JOB, encoding='utf-8')
    assert load_config(path, SCHEMAS).command == 'orbit'
    with pytest.raises(ConfigError):
        load_config(tmp_path / 'missing.ini', SCHEMAS)


def test_family_registry():
    assert make_family('linear', {'diag': (0.5, 2.0)}).dim == 2
    assert make_family('henonND', {'a': 2.0, 'b': 0.1, 'm': 4}).dim == 4
    with pytest.raises(ConfigError):
        make_family('lorenz', {})


def test_config_error_exit_code():
    assert ConfigError('x').exit_code == 5
