import pytest

from src.cli import CURVE, PARAM_PLANE, PHASE, plot
from src.errors import SchemaError
from src.utils import col, write_csv

WINDOW_LABELS: list[str] = [col('a_lo', 'param'), col('a_hi', 'param'), col('t', 'param')]


def _windows_csv(path, count):
    rows = [
        dict(zip(WINDOW_LABELS, (1.9 + 0.01 * i, 1.905 + 0.01 * i, 0.0)))
        for i in range(count)
    ]
    return write_csv(path, rows, WINDOW_LABELS)


def test_plot_is_deterministic(tmp_path):
    source = _windows_csv(tmp_path / 'windows.csv', 3)
    first = plot([source], PARAM_PLANE, tmp_path / 'first.svg')
    second = plot([source], PARAM_PLANE, tmp_path / 'second.svg')
    assert first.read_bytes() == second.read_bytes()


def test_empty_param_plane_draws_only_the_frame(tmp_path):
    source = _windows_csv(tmp_path / 'windows.csv', 0)
    text = plot([source], PARAM_PLANE, tmp_path / 'empty.svg').read_text(encoding='utf-8')
    assert text.startswith('<?xml')
    assert text.count('<rect') == 2


def test_one_rect_per_window(tmp_path):
    source = _windows_csv(tmp_path / 'windows.csv', 5)
    text = plot([source], PARAM_PLANE, tmp_path / 'windows.svg').read_text(encoding='utf-8')
    assert text.count('<rect') == 7


def test_curve_plot_draws_polyline(tmp_path):
    labels = [col('a', 'param'), col('b', 'param')]
    rows = [dict(zip(labels, (2.0 - 0.1 * i, 0.01 * i))) for i in range(10)]
    source = write_csv(tmp_path / 'curve.csv', rows, labels)
    text = plot([source], CURVE, tmp_path / 'curve.svg').read_text(encoding='utf-8')
    assert text.count('<polyline') == 1


def test_phase_plot_draws_points(tmp_path):
    labels = [col('x0', 'phase'), col('x1', 'phase')]
    rows = [dict(zip(labels, (0.1 * i, -0.1 * i))) for i in range(4)]
    source = write_csv(tmp_path / 'orbit.csv', rows, labels)
    text = plot([source], PHASE, tmp_path / 'phase.svg').read_text(encoding='utf-8')
    assert text.count('<circle') == 4


def test_unknown_kind_and_missing_columns(tmp_path):
    source = _windows_csv(tmp_path / 'windows.csv', 1)
    with pytest.raises(SchemaError):
        plot([source], 'histogram', tmp_path / 'x.svg')
    with pytest.raises(SchemaError):
        plot([source], PHASE, tmp_path / 'x.svg')
    with pytest.raises(SchemaError):
        plot([tmp_path / 'missing.csv'], CURVE, tmp_path / 'x.svg')
