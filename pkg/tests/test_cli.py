import json
import importlib.util
from argparse import Namespace
from pathlib import Path

import numpy as np
import pytest

from src import precision
from src.cli import COMMANDS, SCHEMAS, Command, make_pool, parse_config, run
from src.diagnostics import cascade as cascade_module
from src.manifolds import arc as arc_module
from src.utils import read_csv

_run_job_path: Path = Path(__file__).parents[1] / 'scripts' / 'run_job.py'


def _config(tmp_path, command, options='', family='name = henon2'):
    text = (
        f"[job]\nschema = 1\ncommand = {command}\nout = {tmp_path}\n"
        f"[family]\n{family}\n"
        f"[options]\n{options}\n"
    )
    return parse_config(text, SCHEMAS)


def _run_job():
    spec = importlib.util.spec_from_file_location('run_job', _run_job_path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def test_orbit_job_writes_artifacts(tmp_path):
    assert run(_config(tmp_path, 'orbit', 'seed_point = -2.0, -2.0')) == 0

    header = (tmp_path / 'orbit.csv').read_text(encoding='utf-8').splitlines()[0]
    assert 'period[count]' in header.split(',')
    assert 'x0[phase]' in header.split(',')
    df = read_csv(tmp_path / 'orbit.csv', ['period', 'x0', 'x1'])
    assert df['x0'][0] == pytest.approx(-2.0)
    assert df['period'][0] == 1

    document = json.loads((tmp_path / 'orbit.json').read_text(encoding='utf-8'))
    assert document['config']['command'] == 'orbit'
    assert 'out' not in document['config']


def test_empty_window_range_writes_header_only(tmp_path):
    assert run(_config(tmp_path, 'windows', 'n_range =')) == 0
    lines = (tmp_path / 'windows.csv').read_text(encoding='utf-8').splitlines()
    assert len(lines) == 1
    assert lines[0].startswith('n[count],t[param],a_lo[param]')


def test_cascade_job(tmp_path):
    assert run(_config(tmp_path, 'cascade', 'k_max = 3')) == 0
    df = read_csv(tmp_path / 'cascade.csv', ['k', 'a_k'])
    assert len(df) == 4
    assert df['a_k'][1] == pytest.approx(1.0, abs=1e-10)


def test_failed_precondition_exit_code(tmp_path):
    assert run(_config(tmp_path, 'cascade', 'k_max = 1')) == 3
    assert not (tmp_path / 'cascade.csv').exists()


def test_cascade_below_precision_floor_exits_4(tmp_path, monkeypatch):
    monkeypatch.setattr(cascade_module, 'PRECISION_FLOOR', 1e12)
    assert run(_config(tmp_path, 'cascade', 'k_max = 10')) == 4
    df = read_csv(tmp_path / 'cascade.csv', ['k', 'a_k'])
    assert 3 <= len(df) < 11


def test_unresolved_manifold_exits_4(tmp_path, monkeypatch):
    monkeypatch.setattr(arc_module, 'RESOLUTION_GAP', 1 / 64)
    assert run(_config(tmp_path, 'manifold', 'budget = 6.0')) == 4
    assert (tmp_path / 'manifold.csv').exists()


def test_numerical_breakdown_is_a_solver_failure(tmp_path, monkeypatch):
    def broken(config, fam, scanner):
        raise np.linalg.LinAlgError('SVD did not converge')

    monkeypatch.setitem(COMMANDS, 'orbit', Command(broken, SCHEMAS['orbit']))
    assert run(_config(tmp_path, 'orbit')) == 2
    assert not (tmp_path / 'orbit.csv').exists()


def test_pool_workers_share_the_job_precision():
    assert make_pool(1, 'extended') is None
    pool = make_pool(2, 'extended')
    try:
        assert pool.apply(precision.get_precision) == 'extended'
    finally:
        pool.close()
        pool.join()
    assert precision.get_precision() == 'double'


@pytest.mark.slow
def test_windows_job_is_deterministic(tmp_path):
    first, second = tmp_path / 'first', tmp_path / 'second'
    codes = [run(_config(out, 'windows', 'n_range = 6, 7')) for out in (first, second)]
    assert codes[0] == codes[1] and codes[0] in (0, 4)
    for name in ('windows.csv', 'windows.json'):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_plot_job_renders_earlier_output(tmp_path):
    assert run(_config(tmp_path, 'cascade', 'k_max = 3')) == 0
    inputs = tmp_path / 'cascade.csv'
    assert run(_config(tmp_path, 'plot', f"inputs = {inputs}\nkind = curve\nname = cascade.svg")) == 0
    assert '<polyline' in (tmp_path / 'cascade.svg').read_text(encoding='utf-8')


def _namespace(path, **kw):
    values = dict(config=str(path), out=None, precision=None, threads=None, seed=None, progress=False, verbose=0)
    values.update(kw)
    return Namespace(**values)


def test_script_rejects_malformed_config(tmp_path):
    path = tmp_path / 'bad.ini'
    path.write_text("[job]\nschema = 1\ncommand = orbit\n[options]\nspeed = 3\n", encoding='utf-8')
    assert _run_job().main(_namespace(path)) == 5
    assert _run_job().main(_namespace(tmp_path / 'missing.ini')) == 5


def test_script_runs_job_with_overrides(tmp_path):
    path = tmp_path / 'job.ini'
    path.write_text("[job]\nschema = 1\ncommand = cascade\n[options]\nk_max = 2\n", encoding='utf-8')
    out = tmp_path / 'results'
    assert _run_job().main(_namespace(path, out=str(out))) == 0
    assert (out / 'cascade.json').exists()
