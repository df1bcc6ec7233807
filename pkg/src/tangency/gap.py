"""
Signed gaps between folds and leaves.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from ..errors import ExtrapolationRefused
from ..families import MapFamily, ParamPoint
from ..manifolds import FoldPoint, Frame, GraphLeaf, ManifoldArc
from .records import GAPQ_FLOOR, PRIMARY, TangencyRecord

logger = logging.getLogger(__name__)

FoldSelector = Callable[[MapFamily, ParamPoint], FoldPoint]
LeafSelector = Callable[[MapFamily, ParamPoint], GraphLeaf]


def axis_frame(fold: FoldPoint) -> Frame:
    """
    Frame whose value direction is the fold axis.
    """
    e_val = np.zeros(2)
    e_val[fold.component] = 1.0
    e_arg = np.zeros(2)
    e_arg[1 - fold.component] = 1.0
    return Frame(np.zeros(2), e_arg, e_val)


def _as_leaf(leaf: Union[GraphLeaf, ManifoldArc], fold: FoldPoint, frame: Optional[Frame]) -> GraphLeaf:
    if isinstance(leaf, GraphLeaf):
        return leaf
    return GraphLeaf.from_arc(leaf, frame or axis_frame(fold))


def tangency_gap(
    fold: FoldPoint,
    leaf: Union[GraphLeaf, ManifoldArc],
    frame: Optional[Frame] = None,
) -> float:
    """
    Offset of the fold above the leaf, measured along the leaf frame's value
    direction. Positive when the fold lies on the side the frame calls up.
    """
    leaf = _as_leaf(leaf, fold, frame)
    s, w = leaf.frame.to_frame(fold.position)
    if not leaf.covers(s):
        lo, hi = leaf.domain
        raise ExtrapolationRefused(
            f"Leaf covers [{lo:.6g}, {hi:.6g}] but the fold sits at {float(s):.6g}!"
        )
    return float(w - leaf.value(s))


def gap_curvature(
    fold: FoldPoint,
    leaf: Union[GraphLeaf, ManifoldArc],
    frame: Optional[Frame] = None,
) -> float:
    """
    Second derivative of the gap along the fold: 2 q_w - g''.
    """
    leaf = _as_leaf(leaf, fold, frame)
    s, _ = leaf.frame.to_frame(fold.position)
    q_w: float = fold.q * float(leaf.frame.e_val[fold.component])
    return 2.0 * q_w - float(leaf.derivative(s, 2))


@dataclass(eq=False)
class TangencyProblem:
    """
    gap(fold_selector(p), leaf_selector(p)) = 0 in the free parameter, other
    parameters taken from base.
    """
    fam: MapFamily
    base: ParamPoint
    free: str
    fold_selector: FoldSelector
    leaf_selector: LeafSelector
    kind: str = PRIMARY
    n: Optional[int] = None
    n0: Optional[int] = None
    leaf_id: Optional[int] = None

    def at(self, value: float) -> ParamPoint:
        return self.base.replace(**{self.free: value})

    def parts(self, p: ParamPoint) -> tuple[FoldPoint, GraphLeaf]:
        return self.fold_selector(self.fam, p), self.leaf_selector(self.fam, p)

    def gap(self, p: ParamPoint) -> float:
        fold, leaf = self.parts(p)
        return tangency_gap(fold, leaf)

    def gap_at(self, value: float) -> float:
        g = self.gap(self.at(value))
        logger.debug("gap(%s=%.16g) = %.6e", self.free, value, g)
        return g

    def record(self, p: ParamPoint) -> TangencyRecord:
        fold, leaf = self.parts(p)
        gapQ: float = gap_curvature(fold, leaf)
        degenerate: bool = abs(gapQ) < GAPQ_FLOOR
        if degenerate:
            logger.warning("degenerate tangency at %s: |gapQ| = %.3e", p, abs(gapQ))
        return TangencyRecord(
            param = p,
            point = tuple(float(v) for v in fold.position),
            gap = tangency_gap(fold, leaf),
            gapQ = gapQ,
            kind = self.kind,
            free = self.free,
            n = self.n,
            n0 = self.n0,
            leaf_id = self.leaf_id,
            degenerate = degenerate,
            problem = self,
        )
