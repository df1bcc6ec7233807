"""
Submodule for invariant manifolds: arcs, folds and stable leaves.
"""
from .arc import (
    UNSTABLE,
    STABLE,
    PLUS,
    MINUS,
    Accuracy,
    DEFAULT_ACCURACY,
    ManifoldChart,
    ManifoldArc,
    unstable_chart,
    grow_unstable,
    grow_stable,
    tube_distance,
)
from .folds import HORIZONTAL, VERTICAL, FoldPoint, fold_points, refine_on_chart
from .leaves import (
    Frame,
    GraphLeaf,
    StableLeafStack,
    pull_back,
    local_stable_leaf,
    tangency_leaf,
    level_leaf,
    stable_leaf_stack,
)
