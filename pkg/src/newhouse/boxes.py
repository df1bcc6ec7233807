"""
Newhouse boxes: parameter rectangles where a sink coexists with a fresh
secondary tangency, nested over generations.

Generation 1 boxes sit where the secondary tangency curve of order n
crosses the center of the sink window of the same order. A box of
generation g + 1 is a sink window of the secondary tangency of its parent,
inside the parent's window, and carries the sinks of all its ancestors.
Its own secondary tangency, nested on the parent's fold chain, seeds the
generation below.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np
from numpy import ndarray

from .. import precision
from ..errors import PrecisionExhausted, PreconditionError, ToolkitError
from ..families import MapFamily, ParamPoint, predicted_n0
from ..orbits import find_periodic
from ..tangency import (
    DEFAULT_OPTIONS,
    Orders,
    TangencyCurve,
    TangencyRecord,
    UnfoldingOptions,
    default_theta,
    secondary_tangency,
)
from .scanner import Scanner
from .windows import SecondaryTips, SinkWindow, sink_window_scan

logger = logging.getLogger(__name__)

SINK_TOL: float = 1e-10
RESAMPLE_TOL: float = 1e-9
DEFAULT_BUDGET: int = 3
DEFAULT_SPREAD: float = 1e-3
T_SAMPLES: int = 5
M_RANGE: tuple[int, int] = (2, 6)

Rect = dict[str, tuple[float, float]]


def default_generations() -> int:
    return 3 if precision.is_extended() else 2


class VerifiedSink(NamedTuple):
    period: int
    point: tuple[float, ...]
    residual: float
    max_modulus: float

    def record(self) -> dict:
        return {
            'period': self.period,
            'point': list(self.point),
            'residual': self.residual,
            'max_modulus': self.max_modulus,
        }


def verify_sinks(
    fam: MapFamily,
    p: ParamPoint,
    seeds: Sequence[tuple[int, ndarray]],
    tol: float = SINK_TOL,
) -> list[VerifiedSink]:
    """
    Newton-verified sinks at p for each (period, seed); failures are
    dropped.
    """
    found: list[VerifiedSink] = []
    for period, seed in seeds:
        try:
            orbit = find_periodic(fam, p, period, precision.to_float(seed), tol=tol)
        except ToolkitError as e:
            logger.warning("period %d not verified at %s: %s", period, p, e)
            continue
        if not orbit.is_sink or orbit.residual > tol:
            logger.warning("period %d at %s is a %s", period, p, orbit.stability)
            continue
        found.append(VerifiedSink(
            period = period,
            point = tuple(float(v) for v in precision.to_float(orbit.point)),
            residual = float(orbit.residual),
            max_modulus = float(max(orbit.moduli)),
        ))
    return found


def rect_contains(outer: Rect, inner: Rect) -> bool:
    return all(
        outer[name][0] <= lo and hi <= outer[name][1]
        for name, (lo, hi) in inner.items()
    )


def rects_disjoint(u: Rect, v: Rect) -> bool:
    return any(
        u[name][1] < v[name][0] or v[name][1] < u[name][0]
        for name in u
    )


@dataclass(eq=False)
class BoxNode:
    generation: int
    labels: tuple[tuple[int, Optional[int]], ...]
    rect: Rect
    center: Optional[ParamPoint] = None
    sinks: list[VerifiedSink] = field(default_factory=list)
    children: list['BoxNode'] = field(default_factory=list)
    tangency_found: bool = False
    sink_verified: bool = False
    precision_exhausted: bool = False
    closed: bool = False
    tangency: Optional[TangencyRecord] = None
    window: Optional[SinkWindow] = field(default=None, repr=False)
    orders: Orders = ()

    def contains(self, other: 'BoxNode') -> bool:
        return rect_contains(self.rect, other.rect)

    def contains_point(self, p: ParamPoint) -> bool:
        return all(lo <= float(p[name]) <= hi for name, (lo, hi) in self.rect.items())

    def disjoint(self, other: 'BoxNode') -> bool:
        return rects_disjoint(self.rect, other.rect)

    def walk(self) -> Iterator['BoxNode']:
        yield self
        for child in self.children:
            yield from child.walk()

    @property
    def depth(self) -> int:
        return max((node.generation for node in self.walk()), default=0)

    @property
    def exhausted(self) -> bool:
        return any(node.precision_exhausted for node in self.walk())

    def record(self) -> dict:
        return {
            'generation': self.generation,
            'labels': [list(label) for label in self.labels],
            'rect': {name: list(bounds) for name, bounds in self.rect.items()},
            'center': None if self.center is None else self.center.as_dict(),
            'sinks': [s.record() for s in self.sinks],
            'tangency_found': self.tangency_found,
            'sink_verified': self.sink_verified,
            'precision_exhausted': self.precision_exhausted,
            'closed': self.closed,
            'tangency': None if self.tangency is None else self.tangency.record(),
            'orders': [list(o) for o in self.orders],
            'children': [child.record() for child in self.children],
        }


# Generation 1

@dataclass(frozen=True)
class _FirstGeneration:
    """
    Box of order n: the t where the secondary tangency curve crosses the
    window center.
    """
    fam: MapFamily
    curve: TangencyCurve
    t: float
    N: int
    spread: float
    t_samples: int
    theta: Optional[float]
    options: UnfoldingOptions

    def window(self, n: int, t: float) -> Optional[SinkWindow]:
        found = sink_window_scan(self.fam, self.curve, t, (n, n), self.N, options=self.options)
        return found[0] if found else None

    def difference(self, n: int, t: float) -> tuple[float, Optional[SinkWindow], Optional[TangencyRecord]]:
        window = self.window(n, t)
        if window is None:
            return math.nan, None, None
        try:
            sec = secondary_tangency(
                self.fam, window.param(), n, self.N, self.theta, self.options,
                width = window.width,
            )
        except ToolkitError as e:
            logger.debug("no secondary tangency n=%d at t=%.6g: %s", n, t, e)
            return math.nan, window, None
        return sec.value - window.center, window, sec

    def __call__(self, n: int) -> Optional[BoxNode]:
        from scipy.optimize import brentq

        ts: ndarray = np.linspace(self.t - self.spread, self.t + self.spread, self.t_samples)
        D: ndarray = np.array([self.difference(n, t)[0] for t in ts])
        with np.errstate(invalid='ignore'):
            crossings = np.nonzero(D[:-1] * D[1:] < 0.0)[0]
        if len(crossings) == 0:
            logger.warning("secondary curve of order %d does not cross its window", n)
            return None
        if len(crossings) > 1:
            logger.warning("secondary curve of order %d crosses its window %d times", n, len(crossings))
        i = int(crossings[0])

        try:
            t_star: float = float(brentq(
                lambda t: self.difference(n, t)[0],
                ts[i], ts[i + 1],
                xtol = 1e-12 * max(1.0, abs(self.t)),
            ))
        except (ValueError, RuntimeError) as e:
            logger.warning("crossing of order %d lost: %s", n, e)
            return None
        _, window, sec = self.difference(n, t_star)
        if window is None or sec is None:
            return None

        # keep the secondary curve inside the window over the t-interval
        rate: float = abs((D[i + 1] - D[i]) / (ts[i + 1] - ts[i]))
        step: float = ts[1] - ts[0]
        half_t: float = min(step / 2, window.width / (2 * rate)) if rate > 0 else step / 2
        free, transversal = self.curve.names

        center: ParamPoint = sec.param
        sinks = verify_sinks(self.fam, center, [(window.period, window.orbit.point)])
        node = BoxNode(
            generation = 1,
            labels = ((n, sec.n0),),
            rect = {
                free: (window.a_lo, window.a_hi),
                transversal: (t_star - half_t, t_star + half_t),
            },
            center = center,
            sinks = sinks,
            tangency_found = True,
            sink_verified = len(sinks) == 1,
            precision_exhausted = window.precision_exhausted,
            tangency = sec,
            window = window,
            orders = ((n, self.N),),
        )
        logger.info("generation 1 box n=%d n0=%s at %s", n, sec.n0, center)
        return node


# Deeper generations

def _next_generation(
    fam: MapFamily,
    parent: BoxNode,
    m_range: tuple[int, int],
    budget: int,
    theta: Optional[float],
    options: UnfoldingOptions,
    names: tuple[str, str],
    deeper: bool,
) -> list[BoxNode]:
    """
    Sink windows of the parent's secondary tangency inside the parent's
    window. Each child keeps the sinks of its ancestors; with deeper set
    it also gets the secondary tangency of its own order, the primary of
    the generation below.
    """
    sec: TangencyRecord = parent.tangency
    window: SinkWindow = parent.window
    n, N = parent.orders[-1]
    N2: int = N + sec.leaf_id + 1
    generation: int = parent.generation + 1
    free, transversal = names
    t_star: float = float(sec.param[transversal])
    curve = TangencyCurve(names=names, records=[sec])
    tips = SecondaryTips(sec.param, n, N, theta, options, base=parent.orders[:-1])

    found: list[SinkWindow] = []
    for side in (-1, +1):
        try:
            found = sink_window_scan(
                fam, curve, t_star, m_range, N2,
                tips = tips,
                options = options,
                amplitude = window.width,
                side = side,
            )
        except PrecisionExhausted as e:
            logger.warning("generation %d scan under n=%d: %s", generation, n, e)
            parent.precision_exhausted = True
            return []
        except ToolkitError as e:
            logger.warning("generation %d scan under n=%d failed: %s", generation, n, e)
            found = []
        if found:
            break

    lam, mu = abs(window.lam1), abs(window.mu)
    theta_used = default_theta(lam, mu) if theta is None else theta
    t_lo, t_hi = parent.rect[transversal]

    children: list[BoxNode] = []
    for w2 in found[:budget]:
        if not (window.a_lo <= w2.a_lo and w2.a_hi <= window.a_hi):
            logger.warning("generation %d window m=%d leaves its parent window", generation, w2.n)
            continue
        center: ParamPoint = w2.param()
        seeds = [(s.period, np.array(s.point)) for s in parent.sinks]
        sinks = verify_sinks(fam, center, seeds + [(w2.period, w2.orbit.point)]) if parent.sinks else []
        periods = {s.period for s in sinks}
        half_t: float = (t_hi - t_lo) / 2 * min(1.0, w2.width / window.width)
        orders: Orders = parent.orders + ((w2.n, N2),)

        tangency: Optional[TangencyRecord] = None
        exhausted: bool = w2.precision_exhausted
        if deeper and not exhausted:
            try:
                tangency = secondary_tangency(
                    fam, center, w2.n, N2, theta, options,
                    width = w2.width,
                    base = parent.orders,
                )
            except PrecisionExhausted as e:
                logger.warning("generation %d box m=%d: %s", generation, w2.n, e)
                exhausted = True
            except ToolkitError as e:
                logger.warning("no secondary tangency for generation %d box m=%d: %s", generation, w2.n, e)

        n0 = tangency.n0 if tangency is not None else int(round(predicted_n0(w2.n, lam, mu, theta_used)))
        child = BoxNode(
            generation = generation,
            labels = parent.labels + ((w2.n, n0),),
            rect = {
                free: (w2.a_lo, w2.a_hi),
                transversal: (t_star - half_t, t_star + half_t),
            },
            center = center,
            sinks = sinks,
            tangency_found = tangency is not None,
            sink_verified = len(sinks) == generation and len(periods) == generation,
            precision_exhausted = exhausted,
            tangency = tangency,
            window = w2,
            orders = orders,
        )
        children.append(child)
        logger.info("generation %d box m=%d under n=%d: %d sinks", generation, w2.n, n, len(sinks))
    return children


def _below_floor(node: BoxNode, free: str, m_range: tuple[int, int]) -> bool:
    """
    True, and the node flagged, when the windows of the next generation
    would be narrower than the precision floor.
    """
    lo, hi = node.rect[free]
    mu = abs(node.window.mu) if node.window is not None else 2.0
    # widths shrink by mu^-2 per order
    predicted = (hi - lo) * mu**(-2 * m_range[0])
    floor = 1e3 * precision.machine_epsilon() * max(1.0, abs(lo))
    if predicted < floor:
        node.precision_exhausted = True
        logger.warning(
            "generation %d box: next widths %.3e below the precision floor %.3e",
            node.generation, predicted, floor,
        )
        return True
    return False


def _grow(
    fam: MapFamily,
    node: BoxNode,
    generations: int,
    m_range: tuple[int, int],
    budget: int,
    theta: Optional[float],
    options: UnfoldingOptions,
    names: tuple[str, str],
) -> None:
    if node.generation >= generations:
        return
    node.closed = True
    if node.precision_exhausted or _below_floor(node, names[0], m_range):
        return
    if node.tangency is None or node.window is None:
        logger.warning("generation %d box %s has no tangency to build on", node.generation, node.labels)
        return
    node.closed = False
    node.children = _next_generation(
        fam, node, m_range, budget, theta, options, names,
        deeper = node.generation + 1 < generations,
    )
    for child in node.children:
        _grow(fam, child, generations, m_range, budget, theta, options, names)


def build_boxes(
    fam: MapFamily,
    curve: TangencyCurve,
    t: float,
    n_range: tuple[int, int],
    N: int,
    generations: Optional[int] = None,
    budget: int = DEFAULT_BUDGET,
    m_range: tuple[int, int] = M_RANGE,
    spread: float = DEFAULT_SPREAD,
    t_samples: int = T_SAMPLES,
    theta: Optional[float] = None,
    options: UnfoldingOptions = DEFAULT_OPTIONS,
    scanner: Optional[Scanner] = None,
) -> BoxNode:
    """
    Box tree rooted at the unfolding around transversal value t, built
    down to the given generation. budget caps the number of boxes per node
    and generation. Subtrees that run into the precision floor are closed
    and flagged.
    """
    if generations is None:
        generations = default_generations()
    if generations < 1:
        raise PreconditionError(f"generations must be >= 1, got {generations}!")
    if t_samples < 2:
        raise PreconditionError(f"t_samples must be >= 2, got {t_samples}!")

    free, transversal = curve.names
    windows = sink_window_scan(fam, curve, t, n_range, N, options=options)
    first: list[int] = [w.n for w in windows if not w.precision_exhausted][:budget]

    job = _FirstGeneration(
        fam = fam,
        curve = curve,
        t = t,
        N = N,
        spread = spread,
        t_samples = t_samples,
        theta = theta,
        options = options,
    )
    scan = scanner if scanner is not None else Scanner()
    boxes: list[BoxNode] = [box for box in scan(job, first) if box is not None]

    for box in boxes:
        _grow(fam, box, generations, m_range, budget, theta, options, curve.names)

    t_lo, t_hi = t - spread, t + spread
    a_values: list[float] = [curve.free_at(s) for s in (t_lo, t, t_hi) if _on_curve(curve, s)]
    for box in boxes:
        a_values.extend(box.rect[free])
    root = BoxNode(
        generation = 0,
        labels = (),
        rect = {
            free: (min(a_values), max(a_values)) if a_values else (math.nan, math.nan),
            transversal: (t_lo, t_hi),
        },
        children = boxes,
        tangency_found = True,
    )
    logger.info("box tree: %d first generation boxes, depth %d of %d", len(boxes), root.depth, generations)
    return root


def _on_curve(curve: TangencyCurve, t: float) -> bool:
    try:
        curve.free_at(t)
    except ValueError:
        return False
    return True


# Samples

class NHSample(NamedTuple):
    param: ParamPoint
    sinks: list[VerifiedSink]
    generation: int
    labels: tuple[tuple[int, Optional[int]], ...]

    def record(self) -> dict:
        return {
            'param': self.param.as_dict(),
            'generation': self.generation,
            'labels': [list(label) for label in self.labels],
            'sinks': [s.record() for s in self.sinks],
        }


def nh_sample(tree: BoxNode) -> list[NHSample]:
    """
    Centers of the deepest verified boxes along every branch, with their
    sink inventories.
    """
    samples: list[NHSample] = []

    def visit(node: BoxNode) -> bool:
        taken = False
        for child in node.children:
            taken |= visit(child)
        if taken or node.generation == 0:
            return taken
        if node.center is None or node.precision_exhausted or not node.sink_verified:
            return False
        samples.append(NHSample(node.center, list(node.sinks), node.generation, node.labels))
        return True

    visit(tree)
    return samples


def reverify(fam: MapFamily, sample: NHSample, tol: float = RESAMPLE_TOL) -> bool:
    """
    Re-runs Newton on every listed sink of the sample.
    """
    again = verify_sinks(
        fam, sample.param,
        [(s.period, np.array(s.point)) for s in sample.sinks],
        tol = tol,
    )
    return len(again) == len(sample.sinks)
