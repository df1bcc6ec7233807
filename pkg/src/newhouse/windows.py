"""
Sink windows along a tangency unfolding and their trace-zero (strong
sink) curves.

A window of order n at transversal value t is the interval of the free
parameter on which the period-(n + N) orbit through the tip region is a
sink. Centers are located by the tip returning onto its own x coordinate
after n + N steps; edges by bisection where the largest multiplier
modulus crosses 1.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
from numpy import ndarray

from .. import precision
from ..errors import PreconditionError, SolverFailure, ToolkitError
from ..families import MapFamily, ParamPoint
from ..orbits import PeriodicOrbit, find_periodic
from ..tangency import (
    DEFAULT_OPTIONS,
    FoldChain,
    Orders,
    TangencyCurve,
    UnfoldingOptions,
    chain_stack,
    track_z3,
    unfolding_at,
)
from .scanner import Scanner

logger = logging.getLogger(__name__)

SINK_SIDE: int = -1
SCAN_POINTS: int = 97
FIRST_SPAN: float = 30.0
NEXT_SPAN: float = 4.0
EDGE_STEP: float = 1e-8
EDGE_DOUBLINGS: int = 80
EDGE_BISECTIONS: int = 60
PRECISION_FLOOR: float = 1e3
BRACKET_GROWTH: int = 8


# Tip providers

class TipProvider(ABC):
    """
    Supplies the critical point whose return defines the window centers,
    and the saddle whose multipliers set the scaling.
    """

    @abstractmethod
    def tip(self, fam: MapFamily, p: ParamPoint) -> ndarray:
        pass

    @abstractmethod
    def saddle(self, fam: MapFamily, p: ParamPoint) -> PeriodicOrbit:
        pass


@dataclass(frozen=True)
class PrimaryTips(TipProvider):
    """
    The primary fold, re-bisected on the chart of the reference unfolding.
    """
    reference: ParamPoint
    options: UnfoldingOptions = DEFAULT_OPTIONS

    def saddle(self, fam: MapFamily, p: ParamPoint) -> PeriodicOrbit:
        seed = unfolding_at(fam, self.reference, self.options).saddle.point
        return find_periodic(fam, p, 1, precision.to_float(seed))

    def tip(self, fam: MapFamily, p: ParamPoint) -> ndarray:
        unfolding = unfolding_at(fam, self.reference, self.options)
        return unfolding.refine_tip(p, self.saddle(fam, p)).position


@lru_cache(maxsize=8)
def _reference_chain(
    fam: MapFamily,
    p: ParamPoint,
    orders: Orders,
    theta: Optional[float],
    options: UnfoldingOptions,
) -> FoldChain:
    return chain_stack(fam, p, orders, theta, options)


@dataclass(frozen=True)
class SecondaryTips(TipProvider):
    """
    The z3 fold of the chain of order n built at the reference parameter,
    nested under the chains of the base orders.
    """
    reference: ParamPoint
    n: int
    N: int
    theta: Optional[float] = None
    options: UnfoldingOptions = DEFAULT_OPTIONS
    base: Orders = ()

    def chain_for(self, fam: MapFamily) -> FoldChain:
        return _reference_chain(fam, self.reference, self.base + ((self.n, self.N),), self.theta, self.options)

    def saddle(self, fam: MapFamily, p: ParamPoint) -> PeriodicOrbit:
        seed = unfolding_at(fam, self.reference, self.options).saddle.point
        return find_periodic(fam, p, 1, precision.to_float(seed))

    def tip(self, fam: MapFamily, p: ParamPoint) -> ndarray:
        chain = self.chain_for(fam)
        return track_z3(fam, chain, p, self.options, self.saddle(fam, p)).position


# Windows

@dataclass(eq=False)
class SinkWindow:
    n: int
    period: int
    t: float
    a_lo: float
    a_hi: float
    center: float
    orbit: PeriodicOrbit
    mu: float
    lam1: float
    trace_zero: Optional[float] = None
    precision_exhausted: bool = False
    free: str = 'a'
    transversal: str = 'b'
    tangency: float = math.nan

    @property
    def width(self) -> float:
        return self.a_hi - self.a_lo

    @property
    def offset(self) -> float:
        """
        Distance of the center from the tangency parameter.
        """
        return abs(self.center - self.tangency)

    def contains(self, a: float) -> bool:
        return self.a_lo <= a <= self.a_hi

    def param(self, a: Optional[float] = None) -> ParamPoint:
        a = self.center if a is None else a
        return self.orbit.param.replace(**{self.free: a})

    def record(self) -> dict:
        return {
            'n': self.n,
            'period': self.period,
            't': self.t,
            'a_lo': self.a_lo,
            'a_hi': self.a_hi,
            'center': self.center,
            'width': self.width,
            'sa_n': self.trace_zero,
            'mu': self.mu,
            'lambda1': self.lam1,
            'precision_exhausted': self.precision_exhausted,
            'orbit': self.orbit.record(),
        }

    def row(self) -> dict:
        return {
            'n': self.n,
            't': self.t,
            'a_lo': self.a_lo,
            'a_hi': self.a_hi,
            'center': self.center,
            'width': self.width,
            'sa_n': np.nan if self.trace_zero is None else self.trace_zero,
            'mu': self.mu,
            'lambda1': self.lam1,
        }


def _precision_floor(a: float) -> float:
    return PRECISION_FLOOR * precision.machine_epsilon() * max(1.0, abs(a))


def return_offset(
    fam: MapFamily,
    p: ParamPoint,
    tips: TipProvider,
    period: int,
) -> float:
    """
    x(F^period(tip)) - x(tip); vanishes at the window center.
    """
    z = tips.tip(fam, p)
    with np.errstate(over='ignore', invalid='ignore'):
        X = fam.iterate(p, z, period)
    return float(precision.to_float(X)[0] - z[0])


class _SinkTracker:
    """
    Sink check at one free-parameter value, seeded from the last orbit seen
    inside the window.
    """

    def __init__(self, fam: MapFamily, base: ParamPoint, free: str, period: int, seed: ndarray):
        self.fam = fam
        self.base = base
        self.free = free
        self.period = period
        self.seed = precision.to_float(seed)

    def reset(self, seed: ndarray) -> None:
        self.seed = precision.to_float(seed)

    def __call__(self, a) -> Optional[PeriodicOrbit]:
        p = self.base.replace(**{self.free: a})
        try:
            orbit = find_periodic(self.fam, p, self.period, self.seed)
        except ToolkitError:
            return None
        if not orbit.is_sink:
            return None
        self.seed = precision.to_float(orbit.point)
        return orbit


def _edge(tracker: _SinkTracker, center, direction: int, step0: float):
    """
    Window edge along direction: doubling out of the window, then bisection
    between the last inside and first outside values.
    """
    inside = precision.scalar(center)
    step = precision.scalar(step0)
    outside = None
    for _ in range(EDGE_DOUBLINGS):
        trial = inside + direction * step
        if tracker(trial) is None:
            outside = trial
            break
        inside = trial
        step *= 2
    if outside is None:
        raise SolverFailure(f"Window edge not found after {EDGE_DOUBLINGS} doublings!", math.nan)

    floor = precision.scalar(2 * precision.machine_epsilon() * max(1.0, abs(float(center))))
    for _ in range(EDGE_BISECTIONS):
        if abs(outside - inside) <= floor:
            break
        mid = (inside + outside) / 2
        if tracker(mid) is None:
            outside = mid
        else:
            inside = mid
    return (inside + outside) / 2


def _trace_zero(tracker: _SinkTracker, a_lo: float, a_hi: float) -> Optional[float]:
    from scipy.optimize import brentq

    def trace(a: float) -> float:
        orbit = tracker(a)
        return float(orbit.trace) if orbit is not None else math.nan

    # stay off the edges where Newton may drop the orbit
    inset = 1e-6 * (a_hi - a_lo)
    lo, hi = a_lo + inset, a_hi - inset
    f_lo, f_hi = trace(lo), trace(hi)
    if not (np.isfinite(f_lo) and np.isfinite(f_hi)) or f_lo * f_hi > 0.0:
        return None
    try:
        return float(brentq(trace, lo, hi, xtol=4 * np.finfo(float).eps * max(1.0, abs(lo))))
    except (ValueError, RuntimeError):
        return None


def find_window(
    fam: MapFamily,
    base: ParamPoint,
    n: int,
    N: int,
    tips: TipProvider,
    guess: float,
    span: float = FIRST_SPAN,
    free: str = 'a',
    transversal: str = 'b',
    side: int = SINK_SIDE,
    points: int = SCAN_POINTS,
) -> Optional[SinkWindow]:
    """
    Window of order n below (side=-1) or above the tangency parameter
    base[free], searched over offsets guess/span .. guess*span.
    """
    from scipy.optimize import brentq

    period: int = n + N
    a_t: float = float(base[free])

    def h(a: float) -> float:
        try:
            value = return_offset(fam, base.replace(**{free: a}), tips, period)
        except ToolkitError:
            return math.nan
        return value if abs(value) < 1e3 else math.nan

    offsets: ndarray = guess * np.geomspace(1.0 / span, span, points)
    values: ndarray = np.array([h(a_t + side * d) for d in offsets])

    with np.errstate(invalid='ignore'):
        crossings = np.nonzero(values[:-1] * values[1:] < 0.0)[0]
    if len(crossings) == 0:
        logger.warning("no return of period %d near %s=%.16g (n=%d)", period, free, a_t, n)
        return None
    # nearest (in log) to the predicted offset
    mid = np.sqrt(offsets[crossings] * offsets[crossings + 1])
    i = int(crossings[np.argmin(np.abs(np.log(mid / guess)))])
    lo, hi = a_t + side * offsets[i], a_t + side * offsets[i + 1]
    center: float = float(brentq(h, min(lo, hi), max(lo, hi), xtol=1e-15 * max(1.0, abs(a_t)), rtol=4 * np.finfo(float).eps))

    p_c = base.replace(**{free: center})
    try:
        orbit = find_periodic(fam, p_c, period, tips.tip(fam, p_c))
    except ToolkitError as e:
        logger.warning("window n=%d: no orbit of period %d at the center: %s", n, period, e)
        return None
    if not orbit.is_sink:
        logger.warning("window n=%d: center orbit is a %s, window omitted", n, orbit.stability)
        return None

    offset: float = abs(center - a_t)
    step0: float = max(EDGE_STEP * offset, _precision_floor(center) / 4)
    tracker = _SinkTracker(fam, base, free, period, orbit.point)
    a_lo = float(_edge(tracker, center, -1, step0))
    tracker.reset(orbit.point)
    a_hi = float(_edge(tracker, center, +1, step0))
    tracker.reset(orbit.point)

    exhausted: bool = (a_hi - a_lo) < _precision_floor(center)
    sa = None if exhausted else _trace_zero(tracker, a_lo, a_hi)
    if exhausted:
        logger.warning("window n=%d: width %.3e below the precision floor", n, a_hi - a_lo)

    saddle = tips.saddle(fam, p_c)
    window = SinkWindow(
        n = n,
        period = period,
        t = float(base[transversal]) if transversal in base else math.nan,
        a_lo = a_lo,
        a_hi = a_hi,
        center = center,
        orbit = orbit,
        mu = float(saddle.multipliers.mu),
        lam1 = float(saddle.multipliers.lam1),
        trace_zero = sa,
        precision_exhausted = exhausted,
        free = free,
        transversal = transversal,
        tangency = a_t,
    )
    logger.info("window n=%d: [%.16g, %.16g] width %.3e", n, a_lo, a_hi, window.width)
    return window


@dataclass(frozen=True)
class _WindowJob:
    fam: MapFamily
    base: ParamPoint
    N: int
    tips: TipProvider
    amplitude: float
    mu: float
    free: str
    transversal: str
    side: int

    def __call__(self, n: int) -> Optional[SinkWindow]:
        return find_window(
            self.fam, self.base, n, self.N, self.tips,
            guess = self.amplitude * self.mu**(-n),
            span = NEXT_SPAN,
            free = self.free,
            transversal = self.transversal,
            side = self.side,
        )


def sink_window_scan(
    fam: MapFamily,
    curve: TangencyCurve,
    t: float,
    n_range: tuple[int, int],
    N: int,
    tips: Optional[TipProvider] = None,
    options: UnfoldingOptions = DEFAULT_OPTIONS,
    amplitude: float = 1.0,
    side: int = SINK_SIDE,
    scanner: Optional[Scanner] = None,
) -> list[SinkWindow]:
    """
    Windows of order n_range[0]..n_range[1] (inclusive) at transversal
    value t. Successive offsets are seeded from the measured ratio of the
    previous centers; with a scanner, the orders after the first found one
    run as independent jobs seeded by amplitude * mu^-n.
    """
    n_lo, n_hi = n_range
    if n_hi < n_lo:
        return []
    if n_lo < 1 or N < 1:
        raise PreconditionError(f"Window orders and N must be >= 1, got n={n_range}, N={N}!")

    free, transversal = curve.names
    a_t: float = curve.free_at(t)
    base: ParamPoint = curve.records[0].param.replace(**{free: a_t, transversal: t})
    if tips is None:
        tips = PrimaryTips(base, options)
    mu: float = abs(float(tips.saddle(fam, base).multipliers.mu))

    windows: list[SinkWindow] = []
    guess: float = amplitude * mu**(-n_lo)
    span: float = FIRST_SPAN
    n: int = n_lo
    while n <= n_hi:
        window = find_window(fam, base, n, N, tips, guess, span, free, transversal, side)
        n += 1
        if window is None:
            guess /= mu
            continue
        if windows:
            floor = _precision_floor(window.center)
            predicted = window.width * window.width / windows[-1].width
            if predicted < floor:
                windows.append(window)
                logger.warning("predicted width of n=%d below precision floor; scan stops", n)
                return windows
        windows.append(window)
        if scanner is not None:
            break
        ratio = windows[-1].offset / windows[-2].offset if len(windows) > 1 else 1.0 / mu
        guess = window.offset * ratio
        span = NEXT_SPAN

    if scanner is not None and windows and n <= n_hi:
        first = windows[0]
        job = _WindowJob(
            fam = fam,
            base = base,
            N = N,
            tips = tips,
            amplitude = first.offset * mu**first.n,
            mu = mu,
            free = free,
            transversal = transversal,
            side = side,
        )
        windows.extend(w for w in scanner(job, range(n, n_hi + 1)) if w is not None)

    return windows


# Strong sinks

class StrongSinkPoint(NamedTuple):
    t: float
    sa: float
    trace_slope: float
    moduli: tuple[float, ...]
    det: float
    strong: bool


@dataclass
class StrongSinkCurve:
    n: int
    period: int
    points: list[StrongSinkPoint] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    def slopes(self) -> ndarray:
        """
        d sa_n / dt between consecutive samples.
        """
        if len(self.points) < 2:
            return np.zeros(0)
        t = np.array([pt.t for pt in self.points])
        sa = np.array([pt.sa for pt in self.points])
        return np.diff(sa) / np.diff(t)

    def rows(self) -> list[dict]:
        return [
            {
                't': pt.t,
                'sa_n': pt.sa,
                'dtrace_da': pt.trace_slope,
                'max_modulus': max(pt.moduli),
                'strong': pt.strong,
            }
            for pt in self.points
        ]


def _strong_sink_at(
    fam: MapFamily,
    window: SinkWindow,
    t: float,
    guess: float,
    seed: ndarray,
) -> Optional[tuple[StrongSinkPoint, ndarray]]:
    from scipy.optimize import brentq

    base = window.orbit.param.replace(**{window.transversal: t})
    tracker = _SinkTracker(fam, base, window.free, window.period, seed)

    def trace(a: float) -> float:
        orbit = tracker(a)
        return float(orbit.trace) if orbit is not None else math.nan

    half: float = window.width / 2
    lo, hi = guess - half, guess + half
    f_lo, f_hi = trace(lo), trace(hi)
    for _ in range(BRACKET_GROWTH):
        if np.isfinite(f_lo) and np.isfinite(f_hi) and f_lo * f_hi < 0.0:
            break
        half /= 2
        lo, hi = guess - half, guess + half
        f_lo, f_hi = trace(lo), trace(hi)
    else:
        logger.warning("trace does not change sign at %s=%.6g", window.transversal, t)
        return None

    sa: float = float(brentq(trace, lo, hi, xtol=4 * np.finfo(float).eps * max(1.0, abs(lo))))
    orbit = tracker(sa)
    if orbit is None:
        return None

    h: float = 1e-6 * window.width
    slope: float = (trace(sa + h) - trace(sa - h)) / (2 * h)
    moduli = tuple(float(m) for m in orbit.moduli)
    point = StrongSinkPoint(
        t = t,
        sa = sa,
        trace_slope = slope,
        moduli = moduli,
        det = float(orbit.det),
        strong = all(m < 1.0 for m in moduli),
    )
    return point, precision.to_float(orbit.point)


def strong_sink_curve(
    fam: MapFamily,
    window: SinkWindow,
    t_range: tuple[float, float],
    samples: int,
) -> StrongSinkCurve:
    """
    Trace-zero root sa_n(t) of the window's orbit at each of samples values
    of t, continued outward from the window's own t.
    """
    if window.trace_zero is None:
        raise PreconditionError(f"Window n={window.n} has no trace sign change!")
    if samples < 1:
        raise PreconditionError(f"samples must be >= 1, got {samples}!")

    ts: ndarray = np.linspace(t_range[0], t_range[1], samples)
    up = sorted(t for t in ts if t >= window.t)
    down = sorted((t for t in ts if t < window.t), reverse=True)

    found: list[StrongSinkPoint] = []
    for run in (up, down):
        prev: list[tuple[float, float]] = [(window.t, window.trace_zero)]
        seed: ndarray = precision.to_float(window.orbit.point)
        for t in run:
            if len(prev) > 1:
                (t0, s0), (t1, s1) = prev[-2], prev[-1]
                guess = s1 + (s1 - s0) / (t1 - t0) * (t - t1)
            else:
                guess = prev[-1][1]
            result = _strong_sink_at(fam, window, t, guess, seed)
            if result is None:
                continue
            point, seed = result
            found.append(point)
            prev.append((t, point.sa))

    found.sort(key=lambda pt: pt.t)
    return StrongSinkCurve(n=window.n, period=window.period, points=found)


# Center slope

class CenterSlope(NamedTuple):
    measured: float
    predicted: float
    amplitude: float
    mu: float
    dmu_dt: float

    @property
    def ratio(self) -> float:
        return self.measured / self.predicted if self.predicted else math.nan


def center_slope(
    fam: MapFamily,
    curve: TangencyCurve,
    t: float,
    n: int,
    N: int,
    h: float = 1e-4,
    options: UnfoldingOptions = DEFAULT_OPTIONS,
) -> CenterSlope:
    """
    d(a_n - a)/dt by central differences against -n C mu^-(n+1) dmu/dt,
    C = |a_n - a| mu^n measured at t.
    """
    offsets: list[float] = []
    mus: list[float] = []
    for dt in (h, 0.0, -h):
        found = sink_window_scan(fam, curve, t + dt, (n, n), N, options=options)
        if not found:
            raise SolverFailure(f"No window of order {n} at t={t + dt}!", math.nan)
        window = found[0]
        offsets.append(window.center - window.tangency)
        mus.append(abs(window.mu))

    mu: float = mus[1]
    dmu_dt: float = (mus[0] - mus[2]) / (2 * h)
    amplitude: float = offsets[1] * mu**n
    measured: float = (offsets[0] - offsets[2]) / (2 * h)
    predicted: float = -n * amplitude * mu**(-(n + 1)) * dmu_dt
    logger.info("center slope n=%d: measured %.4e, predicted %.4e", n, measured, predicted)
    return CenterSlope(
        measured = measured,
        predicted = predicted,
        amplitude = amplitude,
        mu = mu,
        dmu_dt = dmu_dt,
    )
