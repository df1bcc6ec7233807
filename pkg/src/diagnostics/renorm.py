"""
Sampled return graphs of F^n along a line of initial conditions through a
phase box, for comparison with x -> a - x^2.
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy import ndarray

from .. import precision
from ..errors import PreconditionError
from ..families import MapFamily, ParamPoint
from ..orbits import ESCAPE_RADIUS, PhaseBox

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES: int = 201


@dataclass
class ReturnGraph:
    x_in: ndarray
    x_out: ndarray
    n: int
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.x_in)

    def rows(self) -> list[dict]:
        return [{'x_in': float(u), 'x_out': float(v)} for u, v in zip(self.x_in, self.x_out)]


class QuadraticFit(NamedTuple):
    """
    x_out ~ c0 + c1 x_in + c2 x_in^2; residual is the RMS misfit.
    """
    c0: float
    c1: float
    c2: float
    residual: float


def renorm_return_map(
    fam: MapFamily,
    p: ParamPoint,
    box: PhaseBox,
    n: int,
    samples: int = DEFAULT_SAMPLES,
    axis: int = 0,
) -> ReturnGraph:
    """
    Samples F^n on the segment through the box center along its axis-th
    basis vector; both coordinates are measured along that vector from the
    center. Samples whose orbit leaves the tracking radius are dropped.
    """
    if n < 0:
        raise PreconditionError(f"n must be >= 0, got {n}!")
    if samples < 2:
        raise PreconditionError(f"samples must be >= 2, got {samples}!")
    if not 0 <= axis < len(box.center):
        raise PreconditionError(f"axis {axis} outside the box dimension {len(box.center)}!")

    p = fam.params(p)
    r: float = float(box.half_widths[axis])
    s: ndarray = np.linspace(-r, r, samples)
    U: ndarray = np.zeros((samples, len(box.center)))
    U[:, axis] = s
    X: ndarray = box.to_phase(U)

    alive: ndarray = np.ones(samples, dtype=bool)
    with precision.precision('double'), \
            np.errstate(over='ignore', invalid='ignore'):
        for _ in range(n):
            X = precision.to_float(fam.map(p, X))
            size = np.max(np.abs(X), axis=1)
            alive &= np.isfinite(size) & (size <= ESCAPE_RADIUS)
            X[~alive] = 0.0

    out: ndarray = box.to_local(X)[:, axis]
    truncated: bool = not bool(np.all(alive))
    if truncated:
        logger.warning("return map n=%d: %d of %d samples left the tracking region",
                       n, int(np.sum(~alive)), samples)
    return ReturnGraph(x_in=s[alive], x_out=out[alive], n=n, truncated=truncated)


def fit_quadratic(graph: ReturnGraph) -> QuadraticFit:
    if len(graph) < 3:
        raise PreconditionError(f"Need at least 3 samples for a quadratic fit, got {len(graph)}!")
    c2, c1, c0 = np.polyfit(graph.x_in, graph.x_out, 2)
    misfit = graph.x_out - np.polyval([c2, c1, c0], graph.x_in)
    return QuadraticFit(
        c0 = float(c0),
        c1 = float(c1),
        c2 = float(c2),
        residual = float(math.sqrt(np.mean(misfit**2))),
    )
