"""
Fold points of arcs: vertices where the tangent turns through the
horizontal or the vertical.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from numpy import ndarray

from ..errors import DegenerateFoldError, PreconditionError
from .arc import ManifoldArc, ManifoldChart

logger = logging.getLogger(__name__)

HORIZONTAL: str = 'horizontal-tangency'
VERTICAL: str = 'vertical-tangency'

ROLES: tuple[str, ...] = ('z', 'z1', 'z2', 'z3', 'generic')

# tangent component that vanishes at a fold of the given axis
_COMPONENT: dict[str, int] = {
    HORIZONTAL: 1,
    VERTICAL: 0,
}

BISECTION_RTOL: float = 1e-13
CHART_SAMPLES: int = 3


@dataclass(frozen=True, eq=False)
class FoldPoint:
    """
    Near the fold the arc deviates from the fold position along the fold
    axis by q * s^2, s the arclength from the fold.
    """
    position: ndarray
    axis: str
    q: float
    index: int = -1
    arclength: float = float('nan')
    depth: Optional[int] = None
    t: Optional[float] = None
    role: str = 'generic'
    arc: Optional[ManifoldArc] = None

    @property
    def component(self) -> int:
        return _COMPONENT[self.axis]

    def tagged(self, role: str) -> 'FoldPoint':
        if role not in ROLES:
            raise PreconditionError(f"Unknown fold role '{role}'!")
        return replace(self, role=role)

    def record(self) -> dict:
        return {
            'position': [float(v) for v in self.position],
            'axis': self.axis,
            'q': float(self.q),
            'index': int(self.index),
            'arclength': float(self.arclength),
            'role': self.role,
        }


def refine_on_chart(
    chart: ManifoldChart,
    depth: int,
    t_lo: float,
    t_hi: float,
    component: int,
    rtol: float = BISECTION_RTOL,
) -> Optional[float]:
    """
    Bisection in t for a zero of the chosen tangent component inside
    [t_lo, t_hi] at the given depth; None without a sign change.
    """
    _, T = chart.evaluate(np.array([depth, depth]), np.array([t_lo, t_hi]))
    f_lo, f_hi = T[0, component], T[1, component]
    if f_lo == 0.0:
        return t_lo
    if f_hi == 0.0:
        return t_hi
    if f_lo * f_hi > 0.0:
        return None

    lo, hi = t_lo, t_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or (hi - lo) <= rtol * max(1.0, abs(mid)):
            break
        _, Tm = chart.evaluate(np.array([depth]), np.array([mid]))
        f_mid = Tm[0, component]
        if f_mid == 0.0:
            return mid
        if f_mid * f_lo > 0.0:
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _quadratic_coefficient(s: ndarray, offset: ndarray) -> float:
    ok = np.isfinite(s) & np.isfinite(offset)
    s, idx = np.unique(s[ok], return_index=True)
    offset = offset[ok][idx]
    if len(s) < 3 or np.ptp(s) <= 0.0:
        raise DegenerateFoldError(f"only {len(s)} distinct samples around the fold")
    try:
        q = float(np.polyfit(s, offset, 2)[0])
    except np.linalg.LinAlgError as e:
        raise DegenerateFoldError(f"quadratic fit failed: {e}")
    if not math.isfinite(q) or q == 0.0:
        raise DegenerateFoldError(f"fitted curvature {q!r} is not usable")
    return q


def _fit_q(arc: ManifoldArc, ell_f: float, x_f: float, component: int) -> float:
    """
    Least-squares quadratic through the five vertices nearest the fold.
    """
    nearest = np.argsort(np.abs(arc.arclength - ell_f), kind='stable')[:5]
    s = arc.arclength[nearest] - ell_f
    offset = arc.positions[nearest, component] - x_f
    return _quadratic_coefficient(s, offset)


def _fit_q_on_chart(
    chart: ManifoldChart,
    depth: int,
    t_f: float,
    x_f: ndarray,
    component: int,
    h: float,
) -> float:
    """
    Quadratic through chart points a few h either side of the fold, with s
    the signed distance along the fold tangent.
    """
    _, T = chart.evaluate(np.array([depth]), np.array([t_f]))
    speed = float(np.hypot(*T[0]))
    if not math.isfinite(speed) or speed == 0.0:
        raise DegenerateFoldError("chart tangent vanishes at the fold")
    u = T[0] / speed
    ts = t_f + (h / speed) * np.arange(-CHART_SAMPLES, CHART_SAMPLES + 1)
    X, _ = chart.evaluate(np.full(len(ts), depth), ts)
    return _quadratic_coefficient((X - x_f) @ u, X[:, component] - x_f[component])


def _refine_with_spline(
    arc: ManifoldArc,
    i: int,
    component: int,
) -> tuple[float, ndarray]:
    from scipy.interpolate import CubicSpline
    from scipy.optimize import brentq

    a, b = arc.arclength[i], arc.arclength[i + 1]
    ta, tb = arc.tangents[i, component], arc.tangents[i + 1, component]
    w = ta / (ta - tb)
    linear = (float(a + (b - a) * w), arc.positions[i] + w * (arc.positions[i + 1] - arc.positions[i]))

    # repeated vertices leave the arclength non-increasing
    lo, hi = max(0, i - 3), min(len(arc), i + 5)
    ell, idx = np.unique(arc.arclength[lo:hi], return_index=True)
    if len(ell) < 2 or not b > a:
        return linear
    spline = CubicSpline(ell, arc.positions[lo:hi][idx], axis=0)
    d = spline.derivative()

    fa, fb = d(a)[component], d(b)[component]
    if fa * fb > 0.0:
        # spline disagrees with the vertex tangents
        return linear
    ell_f = brentq(lambda e: d(e)[component], a, b, xtol=BISECTION_RTOL * max(1.0, b))
    return float(ell_f), np.asarray(spline(ell_f), dtype=float)


def fold_points(
    arc: ManifoldArc,
    axis: str = VERTICAL,
    keep: Optional[Callable[[ndarray], bool]] = None,
    skip_degenerate: bool = False,
) -> list[FoldPoint]:
    """
    Folds of the arc for the given axis, refined and with fitted q.

    keep filters refined fold positions before q is fitted. A fold whose q
    cannot be fitted raises DegenerateFoldError, or is logged and dropped
    with skip_degenerate.
    """
    if axis not in _COMPONENT:
        raise PreconditionError(f"Unknown fold axis '{axis}'!")
    if len(arc) < 3:
        raise PreconditionError("fold_points needs an arc with >= 3 vertices!")

    c: int = _COMPONENT[axis]
    comp: ndarray = arc.tangents[:, c]
    sign: ndarray = np.sign(comp)

    # vertices with an exactly vanishing component count as folds themselves
    candidates: list[int] = list(np.nonzero(sign[:-1] * sign[1:] < 0)[0])
    for i in np.nonzero(sign[1:-1] == 0)[0] + 1:
        if sign[i - 1] * sign[i + 1] < 0:
            candidates.append(int(i) - 1)
    candidates = sorted(set(candidates))

    folds: list[FoldPoint] = []
    for i in candidates:
        i = int(i)
        depth: Optional[int] = None
        t_f: Optional[float] = None

        if comp[i + 1] == 0.0 and arc.chart is None:
            ell_f, x_f = float(arc.arclength[i + 1]), arc.positions[i + 1].copy()
        elif arc.chart is not None and arc.depth[i] == arc.depth[i + 1]:
            depth = int(arc.depth[i])
            t_lo = float(arc.params[i] - depth)
            t_hi = float(arc.params[i + 1] - depth)
            t_f = refine_on_chart(arc.chart, depth, t_lo, t_hi, c)
            if t_f is None:
                logger.debug("fold %d lost its sign change on refinement", i)
                continue
            X, _ = arc.chart.evaluate(np.array([depth]), np.array([t_f]))
            x_f = X[0]
            w = (t_f - t_lo) / (t_hi - t_lo) if t_hi > t_lo else 0.0
            ell_f = float(arc.arclength[i] + w * (arc.arclength[i + 1] - arc.arclength[i]))
        else:
            ell_f, x_f = _refine_with_spline(arc, i, c)

        if keep is not None and not keep(x_f):
            continue
        try:
            if t_f is not None:
                q = _fit_q_on_chart(arc.chart, depth, t_f, x_f, c, arc.h_max)
            else:
                q = _fit_q(arc, ell_f, float(x_f[c]), c)
        except DegenerateFoldError as e:
            if not skip_degenerate:
                raise DegenerateFoldError(f"fold {i} at {np.asarray(x_f, dtype=float)}: {e}")
            logger.warning("dropping fold %d: %s", i, e)
            continue

        folds.append(FoldPoint(
            position = x_f,
            axis = axis,
            q = q,
            index = i,
            arclength = ell_f,
            depth = depth,
            t = t_f,
            arc = arc,
        ))

    logger.debug("found %d %s folds", len(folds), axis)
    return folds
