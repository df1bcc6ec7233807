"""
Deterministic SVG rendering of CSV artifacts on a fixed 1000x800 canvas.

Axis mapping: data x in [x_lo, x_hi] goes to pixels [80, 920] left to
right, data y in [y_lo, y_hi] to pixels [720, 80] bottom to top. Ranges
are the data hull padded by 5%; an empty input gets [0, 1] on both axes.

Column schemas (unit tags ignored):

    phase         x0, x1
    param-plane   a_lo, a_hi, t_lo, t_hi   (boxes)
                  a_lo, a_hi, t            (windows; drawn as thin bands)
    curve         first matching pair of (a, b), (t, sa_n), (x_in, x_out),
                  (k, a_k), (n, lambda0), (n, log_growth)
"""
import logging
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
from pandas import DataFrame

from ..errors import SchemaError
from ..utils import read_csv

logger = logging.getLogger(__name__)

WIDTH: int = 1000
HEIGHT: int = 800
LEFT, RIGHT, TOP, BOTTOM = 80, 920, 80, 720
TICKS: int = 5
PAD: float = 0.05
PALETTE: tuple[str, ...] = ('#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b')

PHASE: str = 'phase'
PARAM_PLANE: str = 'param-plane'
CURVE: str = 'curve'
KINDS: tuple[str, ...] = (PHASE, PARAM_PLANE, CURVE)

CURVE_COLUMNS: tuple[tuple[str, str], ...] = (
    ('a', 'b'),
    ('t', 'sa_n'),
    ('x_in', 'x_out'),
    ('k', 'a_k'),
    ('n', 'lambda0'),
    ('n', 'log_growth'),
)


def _fmt(v: float) -> str:
    return f"{v:.4f}"


class Axes:
    def __init__(self, xs: Iterable[float], ys: Iterable[float]):
        self.x_lo, self.x_hi = self._range(xs)
        self.y_lo, self.y_hi = self._range(ys)

    @staticmethod
    def _range(values: Iterable[float]) -> tuple[float, float]:
        v = np.array([x for x in values if np.isfinite(x)], dtype=float)
        if len(v) == 0:
            return 0.0, 1.0
        lo, hi = float(v.min()), float(v.max())
        if hi == lo:
            half = 0.5 * max(1.0, abs(lo))
            return lo - half, hi + half
        pad = PAD * (hi - lo)
        return lo - pad, hi + pad

    def px(self, x: float) -> float:
        return LEFT + (x - self.x_lo) / (self.x_hi - self.x_lo) * (RIGHT - LEFT)

    def py(self, y: float) -> float:
        return BOTTOM - (y - self.y_lo) / (self.y_hi - self.y_lo) * (BOTTOM - TOP)

    def elements(self, x_label: str, y_label: str) -> list[str]:
        out: list[str] = [
            f'<rect x="{LEFT}" y="{TOP}" width="{RIGHT - LEFT}" height="{BOTTOM - TOP}" '
            f'fill="none" stroke="black" stroke-width="1"/>',
        ]
        for i in range(TICKS):
            fx = self.x_lo + (self.x_hi - self.x_lo) * i / (TICKS - 1)
            fy = self.y_lo + (self.y_hi - self.y_lo) * i / (TICKS - 1)
            x, y = self.px(fx), self.py(fy)
            out.append(f'<line x1="{_fmt(x)}" y1="{BOTTOM}" x2="{_fmt(x)}" y2="{BOTTOM + 6}" stroke="black"/>')
            out.append(f'<text x="{_fmt(x)}" y="{BOTTOM + 22}" font-size="12" text-anchor="middle">{fx:.6g}</text>')
            out.append(f'<line x1="{LEFT - 6}" y1="{_fmt(y)}" x2="{LEFT}" y2="{_fmt(y)}" stroke="black"/>')
            out.append(f'<text x="{LEFT - 10}" y="{_fmt(y + 4)}" font-size="12" text-anchor="end">{fy:.6g}</text>')
        out.append(f'<text x="{(LEFT + RIGHT) // 2}" y="{HEIGHT - 30}" font-size="14" text-anchor="middle">{x_label}</text>')
        out.append(
            f'<text x="20" y="{(TOP + BOTTOM) // 2}" font-size="14" text-anchor="middle" '
            f'transform="rotate(-90 20 {(TOP + BOTTOM) // 2})">{y_label}</text>'
        )
        return out


def _document(body: Sequence[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">\n'
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
    )
    return head + '\n'.join(body) + '\n</svg>\n'


def _curve_columns(df: DataFrame) -> tuple[str, str]:
    for x, y in CURVE_COLUMNS:
        if x in df.columns and y in df.columns:
            return x, y
    raise SchemaError(f"No curve column pair among {list(CURVE_COLUMNS)} in {list(df.columns)}!")


def _phase(frames: list[DataFrame]) -> list[str]:
    xs = [v for df in frames for v in df['x0']]
    ys = [v for df in frames for v in df['x1']]
    axes = Axes(xs, ys)
    body = axes.elements('x0', 'x1')
    for i, df in enumerate(frames):
        color = PALETTE[i % len(PALETTE)]
        for x, y in zip(df['x0'], df['x1']):
            if np.isfinite(x) and np.isfinite(y):
                body.append(f'<circle cx="{_fmt(axes.px(x))}" cy="{_fmt(axes.py(y))}" r="1.5" fill="{color}"/>')
    return body


def _param_plane(frames: list[DataFrame]) -> list[str]:
    rects: list[tuple[int, float, float, float, float]] = []
    bands = False
    for i, df in enumerate(frames):
        if 't_lo' in df.columns and 't_hi' in df.columns:
            for a_lo, a_hi, t_lo, t_hi in zip(df['a_lo'], df['a_hi'], df['t_lo'], df['t_hi']):
                rects.append((i, a_lo, a_hi, t_lo, t_hi))
        else:
            bands = True
            for a_lo, a_hi, t in zip(df['a_lo'], df['a_hi'], df['t']):
                rects.append((i, a_lo, a_hi, t, t))

    axes = Axes(
        [v for r in rects for v in (r[1], r[2])],
        [v for r in rects for v in (r[3], r[4])],
    )
    body = axes.elements('a', 't')
    band = 0.01 * (BOTTOM - TOP) if bands else 0.0
    for i, a_lo, a_hi, t_lo, t_hi in rects:
        x0, x1 = axes.px(a_lo), axes.px(a_hi)
        y0, y1 = axes.py(t_hi), axes.py(t_lo)
        if t_lo == t_hi:
            y0, y1 = y0 - band / 2, y1 + band / 2
        body.append(
            f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(max(x1 - x0, 0.0))}" '
            f'height="{_fmt(max(y1 - y0, 0.0))}" fill="{PALETTE[i % len(PALETTE)]}" '
            f'fill-opacity="0.5" stroke="{PALETTE[i % len(PALETTE)]}" stroke-width="0.5"/>'
        )
    return body


def _curve(frames: list[DataFrame]) -> list[str]:
    pairs = [_curve_columns(df) if len(df.columns) else ('x', 'y') for df in frames]
    xs = [v for df, (x, _) in zip(frames, pairs) if x in df.columns for v in df[x]]
    ys = [v for df, (_, y) in zip(frames, pairs) if y in df.columns for v in df[y]]
    axes = Axes(xs, ys)
    x_label, y_label = pairs[0] if pairs else ('x', 'y')
    body = axes.elements(x_label, y_label)
    for i, (df, (x, y)) in enumerate(zip(frames, pairs)):
        if x not in df.columns or len(df) == 0:
            continue
        points = ' '.join(
            f"{_fmt(axes.px(u))},{_fmt(axes.py(v))}"
            for u, v in zip(df[x], df[y])
            if np.isfinite(u) and np.isfinite(v)
        )
        if points:
            body.append(
                f'<polyline points="{points}" fill="none" '
                f'stroke="{PALETTE[i % len(PALETTE)]}" stroke-width="1.5"/>'
            )
    return body


REQUIRED: dict[str, tuple[str, ...]] = {
    PHASE: ('x0', 'x1'),
    PARAM_PLANE: ('a_lo', 'a_hi'),
    CURVE: (),
}


def render(frames: list[DataFrame], kind: str) -> str:
    if kind == PHASE:
        return _document(_phase(frames))
    if kind == PARAM_PLANE:
        for df in frames:
            if not ('t' in df.columns or {'t_lo', 't_hi'} <= set(df.columns)):
                raise SchemaError(f"param-plane input needs 't' or 't_lo'/'t_hi', got {list(df.columns)}!")
        return _document(_param_plane(frames))
    if kind == CURVE:
        return _document(_curve(frames))
    raise SchemaError(f"Unknown plot kind '{kind}'; choose from {KINDS}!")


def plot(
    inputs: Sequence[Union[str, Path]],
    kind: str,
    out: Union[str, Path],
) -> Path:
    """
    Renders the CSV inputs into one SVG file; identical inputs give
    byte-identical output.
    """
    if kind not in KINDS:
        raise SchemaError(f"Unknown plot kind '{kind}'; choose from {KINDS}!")
    frames: list[DataFrame] = [read_csv(path, REQUIRED[kind]) for path in inputs]
    out = Path(out)
    with open(out, 'w', encoding='utf-8', newline='\n') as f:
        f.write(render(frames, kind))
    logger.info("wrote %s plot of %d inputs to %s", kind, len(frames), out)
    return out
