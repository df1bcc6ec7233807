"""
The Hénon unfolding frame: saddle, stable leaves, the right unstable leg
and its folds at one parameter point, plus selectors that rebuild them
for the solvers.
"""
import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import NamedTuple, Optional

import numpy as np
from numpy import ndarray

from .. import precision
from ..errors import NoTangencyInRange, PreconditionError
from ..families import MapFamily, ParamPoint
from ..manifolds import (
    DEFAULT_ACCURACY,
    PLUS,
    VERTICAL,
    Accuracy,
    FoldPoint,
    Frame,
    GraphLeaf,
    ManifoldArc,
    StableLeafStack,
    fold_points,
    grow_unstable,
    level_leaf,
    local_stable_leaf,
    refine_on_chart,
    stable_leaf_stack,
    tangency_leaf,
    unstable_chart,
)
from ..orbits import PeriodicOrbit, find_periodic
from .gap import tangency_gap

logger = logging.getLogger(__name__)

LEVEL_SAMPLES: int = 201
MAX_LEVEL: int = 200


@dataclass(frozen=True)
class UnfoldingOptions:
    """
    Knobs of the unfolding frame. fold_index counts the vertical folds of
    the right leg inside the footprint of the tangency leaf: 0 is the outer
    fold, 1 the inner one that makes the primary tangency.
    """
    free: str = 'a'
    transversal: str = 'b'
    saddle_seed: tuple[float, ...] = (-2.0, -2.0)
    leaf_origin: tuple[float, ...] = (2.0, 0.0)
    budget: float = 15.5
    accuracy: Accuracy = DEFAULT_ACCURACY
    fold_index: int = 1
    footprint: float = 0.5
    leg: str = PLUS


DEFAULT_OPTIONS: UnfoldingOptions = UnfoldingOptions()


class HenonUnfolding:

    def __init__(
        self,
        fam: MapFamily,
        p: ParamPoint,
        options: UnfoldingOptions = DEFAULT_OPTIONS,
    ):
        if fam.dim != 2:
            raise PreconditionError(f"The unfolding frame is planar; {fam.name} has m={fam.dim}!")
        self.fam: MapFamily = fam
        self.p: ParamPoint = fam.params(p)
        self.options: UnfoldingOptions = options
        self._levels: dict[int, Optional[GraphLeaf]] = {}

    @cached_property
    def saddle(self) -> PeriodicOrbit:
        return find_periodic(self.fam, self.p, 1, self.options.saddle_seed)

    @cached_property
    def local_leaf(self) -> GraphLeaf:
        return local_stable_leaf(self.fam, self.p, self.saddle)

    @cached_property
    def tangency_leaf(self) -> GraphLeaf:
        return tangency_leaf(self.fam, self.p, self.local_leaf, origin=self.options.leaf_origin)

    @cached_property
    def arc(self) -> ManifoldArc:
        return grow_unstable(
            self.fam, self.p, self.saddle,
            budget = self.options.budget,
            acc = self.options.accuracy,
            leg = self.options.leg,
        )

    @cached_property
    def folds(self) -> list[FoldPoint]:
        """
        Vertical folds of the leg over the tangency leaf's footprint, in
        arclength order.
        """
        leaf = self.tangency_leaf

        def over_leaf(x: ndarray) -> bool:
            s, w = leaf.frame.to_frame(x)
            return abs(w) <= self.options.footprint and leaf.covers(s)

        kept = fold_points(self.arc, VERTICAL, keep=over_leaf)
        return sorted(kept, key=lambda f: f.arclength)

    def fold(self, index: int) -> FoldPoint:
        if index >= len(self.folds):
            raise NoTangencyInRange(
                f"Only {len(self.folds)} folds over the tangency leaf at {self.p}; "
                f"fold {index} requested!"
            )
        return self.folds[index]

    @property
    def tip(self) -> FoldPoint:
        return self.fold(self.options.fold_index).tagged('z')

    @property
    def gap(self) -> float:
        return tangency_gap(self.tip, self.tangency_leaf)

    @property
    def eigen_frame(self) -> Frame:
        return self.local_leaf.frame

    def level_leaf(self, k: int) -> Optional[GraphLeaf]:
        """
        V_k = F^{-(k+1)}(tangency leaf) next to the tangency leaf, i.e. the
        preimage of W_k one step before the saddle neighbourhood.
        """
        if k not in self._levels:
            half = self.options.footprint
            self._levels[k] = level_leaf(
                self.fam, self.p, self.tangency_leaf, k + 1,
                sigma = np.linspace(-half, half, LEVEL_SAMPLES),
            )
        return self._levels[k]

    def level_height(self, k: int, s: float) -> float:
        leaf = self.level_leaf(k)
        if leaf is None or not leaf.covers(s):
            return np.nan
        return float(leaf.value(s) - self.tangency_leaf.value(s))

    @cached_property
    def q2(self) -> ndarray:
        """
        First transversal crossing of the leg with the tangency leaf.
        """
        leaf = self.tangency_leaf
        s, w = leaf.frame.to_frame(self.arc.positions)
        h = w - leaf.value(s)
        with np.errstate(invalid='ignore'):
            cross = np.nonzero(h[:-1] * h[1:] < 0.0)[0]
        if len(cross) == 0:
            raise NoTangencyInRange(f"The leg never crosses the tangency leaf at {self.p}!")
        i = int(cross[0])
        r = h[i] / (h[i] - h[i + 1])
        return self.arc.positions[i] + r * (self.arc.positions[i + 1] - self.arc.positions[i])

    def stack(self, count: int) -> StableLeafStack:
        return stable_leaf_stack(
            self.fam, self.p, self.saddle, self.tangency_leaf, count,
            offset = None,
            local = self.local_leaf,
        )

    def refine_tip(self, p: ParamPoint, saddle: Optional[PeriodicOrbit] = None) -> FoldPoint:
        """
        The tip at a nearby parameter by re-bisecting its chart parameter at
        the same depth; no arc is grown.
        """
        tip = self.tip
        if tip.depth is None or tip.t is None:
            raise PreconditionError("Tip was not refined on a chart!")
        if saddle is None:
            saddle = find_periodic(self.fam, p, 1, precision.to_float(self.saddle.point))
        chart = unstable_chart(self.fam, p, saddle, leg=self.options.leg)

        width: float = 1e-6
        while width <= 0.5:
            t = refine_on_chart(chart, tip.depth, tip.t - width, tip.t + width, tip.component)
            if t is not None:
                X, _ = chart.evaluate(np.array([tip.depth]), np.array([t]))
                return FoldPoint(
                    position = X[0],
                    axis = tip.axis,
                    q = tip.q,
                    depth = tip.depth,
                    t = t,
                    role = 'z',
                )
            width *= 4.0
        raise NoTangencyInRange(f"Tip fold lost near {p}!")

    def __repr__(self) -> str:
        return f"<HenonUnfolding {self.fam.name} at {self.p}>"


@lru_cache(maxsize=16)
def unfolding_at(
    fam: MapFamily,
    p: ParamPoint,
    options: UnfoldingOptions = DEFAULT_OPTIONS,
) -> HenonUnfolding:
    return HenonUnfolding(fam, p, options)


@dataclass(frozen=True)
class FoldSelector:
    options: UnfoldingOptions = DEFAULT_OPTIONS
    index: Optional[int] = None

    def __call__(self, fam: MapFamily, p: ParamPoint) -> FoldPoint:
        unfolding = unfolding_at(fam, p, self.options)
        index = self.options.fold_index if self.index is None else self.index
        return unfolding.fold(index)


@dataclass(frozen=True)
class LeafSelector:
    """
    The tangency leaf, or the level leaf V_k when k is given.
    """
    options: UnfoldingOptions = DEFAULT_OPTIONS
    k: Optional[int] = None

    def __call__(self, fam: MapFamily, p: ParamPoint) -> GraphLeaf:
        unfolding = unfolding_at(fam, p, self.options)
        if self.k is None:
            return unfolding.tangency_leaf
        leaf = unfolding.level_leaf(self.k)
        if leaf is None:
            raise NoTangencyInRange(f"Level leaf V_{self.k} not found at {p}!")
        return leaf


class UnfoldingReport(NamedTuple):
    dgap_dfree: float
    dmu_dtransversal: float
    mu: float
    lam1: float

    @property
    def p1(self) -> bool:
        return self.dgap_dfree != 0.0 and np.isfinite(self.dgap_dfree)

    @property
    def p2(self) -> bool:
        return self.dmu_dtransversal != 0.0 and np.isfinite(self.dmu_dtransversal)

    @property
    def ok(self) -> bool:
        return self.p1 and self.p2


def unfolding_conditions(
    fam: MapFamily,
    record,
    options: UnfoldingOptions = DEFAULT_OPTIONS,
    h: float = 1e-6,
) -> UnfoldingReport:
    """
    The tangency moves with nonzero speed in the free parameter and the
    saddle's unstable multiplier changes along the transversal one.
    """
    if record.problem is None:
        raise PreconditionError("Record carries no tangency problem!")
    value: float = record.value
    dgap: float = (record.problem.gap_at(value + h) - record.problem.gap_at(value - h)) / (2 * h)

    t_name = options.transversal
    t: float = float(record.param[t_name])
    saddle = find_periodic(fam, record.param, 1, options.saddle_seed)
    mus: list[float] = []
    for dt in (h, -h):
        q = record.param.replace(**{t_name: t + dt})
        mus.append(find_periodic(fam, q, 1, precision.to_float(saddle.point)).multipliers.mu)
    dmu: float = (mus[0] - mus[1]) / (2 * h)

    return UnfoldingReport(
        dgap_dfree = dgap,
        dmu_dtransversal = dmu,
        mu = saddle.multipliers.mu,
        lam1 = saddle.multipliers.lam1,
    )


def primary_curve(
    fam: MapFamily,
    p: ParamPoint,
    ts,
    guess: float,
    step: float = 1e-3,
    options: UnfoldingOptions = DEFAULT_OPTIONS,
    tol: float = 1e-10,
):
    """
    The primary tangency solved separately at each transversal value in
    ts (ascending), each search started from the previous root.
    """
    from .gap import TangencyProblem
    from .records import TangencyCurve
    from .solve import find_bracket, solve_tangency

    p = fam.params(p)
    fold_selector = FoldSelector(options)
    leaf_selector = LeafSelector(options)
    records = []
    value: float = guess
    for t in sorted(float(t) for t in ts):
        q = p.replace(**{options.transversal: t})
        problem = TangencyProblem(fam, q, options.free, fold_selector, leaf_selector)
        bracket = find_bracket(problem.gap_at, value, step)
        record = solve_tangency(
            fam, q, options.free, bracket,
            fold_selector = fold_selector,
            leaf_selector = leaf_selector,
            tol = tol,
        )
        records.append(record)
        value = record.value
    return TangencyCurve(names=(options.free, options.transversal), records=records)
