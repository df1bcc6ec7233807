"""
Submodule for homoclinic tangencies: gaps, solvers, continuation, the
Hénon unfolding frame and secondary / double tangencies.
"""
from .records import PRIMARY, SECONDARY, DOUBLE, GAPQ_FLOOR, TangencyRecord, TangencyCurve
from .gap import TangencyProblem, axis_frame, tangency_gap, gap_curvature
from .solve import find_bracket, solve_tangency, continue_tangency
from .frame import (
    UnfoldingOptions,
    DEFAULT_OPTIONS,
    HenonUnfolding,
    FoldSelector,
    LeafSelector,
    UnfoldingReport,
    unfolding_at,
    unfolding_conditions,
    primary_curve,
)
from .secondary import (
    Orders,
    FoldChain,
    ChainTip,
    chain_stack,
    track_z3,
    stack_level_leaf,
    default_theta,
    fold_chain,
    deepest_leaf,
    secondary_tangency,
    double_tangency,
    continue_double_tangency,
)
