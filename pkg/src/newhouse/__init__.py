"""
Submodule for the Newhouse construction: return times, sink windows,
strong-sink curves and box trees.
"""
from .scanner import Scanner
from .returns import CAPTURE_RADIUS, EXIT_RADIUS, MAX_RETURN, exit_point, return_time
from .windows import (
    SINK_SIDE,
    TipProvider,
    PrimaryTips,
    SecondaryTips,
    SinkWindow,
    StrongSinkPoint,
    StrongSinkCurve,
    CenterSlope,
    return_offset,
    find_window,
    sink_window_scan,
    strong_sink_curve,
    center_slope,
)
from .boxes import (
    VerifiedSink,
    BoxNode,
    NHSample,
    default_generations,
    verify_sinks,
    rect_contains,
    rects_disjoint,
    build_boxes,
    nh_sample,
    reverify,
)
