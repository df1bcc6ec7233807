"""
Return time from the saddle's exit neighbourhood to a tangency point.
"""
import logging
from typing import Optional, Sequence

import numpy as np
from numpy import ndarray

from .. import precision
from ..errors import PreconditionError, SolverFailure
from ..families import MapFamily, ParamPoint
from ..manifolds import PLUS, ManifoldChart, unstable_chart
from ..manifolds.arc import MAX_CHUNKS
from ..orbits import PeriodicOrbit, find_periodic
from ..tangency import TangencyRecord

logger = logging.getLogger(__name__)

CAPTURE_RADIUS: float = 0.05
EXIT_RADIUS: float = 0.5
MAX_RETURN: int = 200
DOMAIN_SAMPLES: int = 20001


def exit_point(chart: ManifoldChart, r_exit: float = EXIT_RADIUS) -> tuple[int, float]:
    """
    Chart coordinates (depth, t) of the first point of the branch at
    distance r_exit from the saddle.
    """
    from scipy.optimize import brentq

    def distance(depth: int, t: float) -> float:
        X, _ = chart.evaluate(np.array([depth]), np.array([t]))
        return float(np.linalg.norm(X[0] - chart.origin))

    for depth in range(MAX_CHUNKS):
        if distance(depth, 1.0) >= r_exit:
            if distance(depth, 0.0) >= r_exit:
                return depth, 0.0
            t = brentq(lambda t: distance(depth, t) - r_exit, 0.0, 1.0, xtol=1e-14)
            return depth, float(t)
    raise SolverFailure(f"Branch never reaches distance {r_exit} from the saddle!")


def return_time(
    fam: MapFamily,
    p: ParamPoint,
    primary: TangencyRecord,
    saddle: Optional[PeriodicOrbit] = None,
    capture: float = CAPTURE_RADIUS,
    r_exit: float = EXIT_RADIUS,
    max_k: int = MAX_RETURN,
    samples: int = DOMAIN_SAMPLES,
    leg: str = PLUS,
    saddle_seed: Sequence[float] = (-2.0, -2.0),
) -> int:
    """
    Smallest k such that F^k of the fundamental domain at the exit point
    comes within capture of the tangency point.
    """
    if not capture > 0:
        raise PreconditionError(f"Capture radius must be positive, got {capture}!")
    if max_k < 1:
        raise PreconditionError(f"max_k must be >= 1, got {max_k}!")

    p = fam.params(p)
    if saddle is None:
        saddle = find_periodic(fam, p, 1, saddle_seed)
    chart: ManifoldChart = unstable_chart(fam, p, saddle, leg=leg)
    depth, t_exit = exit_point(chart, r_exit)

    s: ndarray = depth + t_exit + np.linspace(0.0, 1.0, samples, endpoint=False)
    X, _ = chart(s)
    target: ndarray = np.asarray(primary.point, dtype=float)

    with precision.precision('double'), \
            np.errstate(over='ignore', invalid='ignore'):
        for k in range(1, max_k + 1):
            X = precision.to_float(fam.map(p, X))
            dist = np.linalg.norm(X - target, axis=1)
            closest = float(np.nanmin(dist)) if np.any(np.isfinite(dist)) else np.inf
            if closest <= capture:
                logger.debug("return time %d (closest %.3e)", k, closest)
                return k

    raise SolverFailure(f"No return within {capture} of the tangency point after {max_k} steps!")
