import numpy as np
import pytest

from src import precision
from src.errors import PreconditionError, SolverFailure
from src.families import ParamPoint, henon2
from src.newhouse import (
    BoxNode,
    build_boxes,
    center_slope,
    Scanner,
    NHSample,
    SINK_SIDE,
    TipProvider,
    find_window,
    nh_sample,
    rect_contains,
    rects_disjoint,
    return_offset,
    return_time,
    reverify,
    sink_window_scan,
    strong_sink_curve,
    verify_sinks,
)
from src.newhouse.boxes import VerifiedSink, _below_floor, _grow
from src.orbits import find_periodic
from src.tangency import DEFAULT_OPTIONS, TangencyCurve, TangencyRecord, primary_curve


class FixedTips(TipProvider):
    """
    The critical point of x -> a - x^2 and the fixed point near -2.
    """

    def tip(self, fam, p):
        return np.zeros(2)

    def saddle(self, fam, p):
        return find_periodic(fam, p, 1, (-2.0, -2.0))


def _target(point) -> TangencyRecord:
    return TangencyRecord(param=ParamPoint.of(a=0.0), point=point, gap=0.0, gapQ=-2.0)


def _degenerate_curve() -> TangencyCurve:
    record = TangencyRecord(param=ParamPoint.of(a=2.0, b=0.0), point=(2.0, 0.0), gap=0.0, gapQ=-2.0)
    return TangencyCurve(names=('a', 'b'), records=[record])


# Return times

def test_reinjection_return_time(reinjection):
    p = reinjection.params()
    assert return_time(reinjection, p, _target((9.0, 10.0)), saddle_seed=(0.0, 0.0)) == 3


def test_return_time_independent_of_capture(reinjection):
    p = reinjection.params()
    target = _target((9.0, 10.0))
    assert return_time(reinjection, p, target, capture=0.025, saddle_seed=(0.0, 0.0)) == 3


def test_return_time_rejects_zero_capture(reinjection):
    with pytest.raises(PreconditionError):
        return_time(reinjection, reinjection.params(), _target((9.0, 10.0)), capture=0.0)


def test_return_time_gives_up_after_max_k(reinjection):
    with pytest.raises(SolverFailure):
        return_time(
            reinjection, reinjection.params(), _target((9.0, 10.0)),
            max_k = 2,
            saddle_seed = (0.0, 0.0),
        )


# Windows

def test_return_offset_of_critical_point(henon):
    # 0 -> 2 -> -2 -> -2
    assert return_offset(henon, henon.params(), FixedTips(), 3) == pytest.approx(-2.0)


def test_one_dimensional_window_below_tangency(henon):
    window = find_window(henon, henon.params(), 6, 3, FixedTips(), guess=4.0**-6)
    assert window is not None
    assert window.period == 9
    assert window.a_lo < window.center < window.a_hi < 2.0
    assert window.orbit.is_sink
    assert not window.precision_exhausted
    assert window.trace_zero == pytest.approx(window.center, abs=1e-3 * window.width)
    assert window.mu == pytest.approx(4.0, rel=1e-2)
    row = window.row()
    assert set(row) == {'n', 't', 'a_lo', 'a_hi', 'center', 'width', 'sa_n', 'mu', 'lambda1'}
    assert row['t'] == 0.0


def test_window_scan_on_empty_range(henon):
    assert sink_window_scan(henon, _degenerate_curve(), 0.0, (5, 4), 3, tips=FixedTips()) == []


def test_window_scan_rejects_bad_orders(henon):
    with pytest.raises(PreconditionError):
        sink_window_scan(henon, _degenerate_curve(), 0.0, (0, 3), 3, tips=FixedTips())
    with pytest.raises(PreconditionError):
        sink_window_scan(henon, _degenerate_curve(), 0.0, (3, 4), 0, tips=FixedTips())


@pytest.mark.slow
def test_window_scan_gives_disjoint_shrinking_windows(henon):
    windows = sink_window_scan(henon, _degenerate_curve(), 0.0, (4, 7), 3, tips=FixedTips())
    assert len(windows) >= 3
    for u, v in zip(windows, windows[1:]):
        assert u.a_hi < v.a_lo or v.a_hi < u.a_lo
        assert v.width < u.width
        assert v.offset < u.offset
    assert all(SINK_SIDE * (w.center - 2.0) > 0 for w in windows)


# Sinks and boxes

def test_verify_sinks_keeps_only_sinks():
    fam = henon2(1.0, 0.0)
    p = fam.params()
    x = (np.sqrt(5.0) - 1.0) / 2
    sinks = verify_sinks(fam, p, [(2, np.array([0.1, 0.9])), (1, np.array([x, x]))])
    assert len(sinks) == 1
    assert sinks[0].period == 2
    assert sinks[0].max_modulus < 1e-6


def test_reverify_sample():
    fam = henon2(1.0, 0.0)
    p = fam.params()
    sinks = verify_sinks(fam, p, [(2, np.array([0.1, 0.9]))])
    sample = NHSample(p, sinks, 1, ((2, None),))
    assert reverify(fam, sample)

    x = (np.sqrt(5.0) - 1.0) / 2
    saddle = VerifiedSink(period=1, point=(x, x), residual=0.0, max_modulus=0.0)
    assert not reverify(fam, sample._replace(sinks=sinks + [saddle]))


def test_rect_helpers():
    outer = {'a': (0.0, 1.0), 'b': (0.0, 1.0)}
    inner = {'a': (0.2, 0.3), 'b': (0.4, 0.5)}
    other = {'a': (0.5, 0.6), 'b': (0.4, 0.5)}
    assert rect_contains(outer, inner)
    assert not rect_contains(inner, outer)
    assert rects_disjoint(inner, other)
    assert not rects_disjoint(outer, inner)


def _node(generation, labels, verified=True, exhausted=False, children=()):
    center = ParamPoint.of(a=1.0 + 0.1 * len(labels), b=0.0)
    sinks = [VerifiedSink(period=n, point=(0.0, 0.0), residual=0.0, max_modulus=0.1) for n, _ in labels]
    return BoxNode(
        generation = generation,
        labels = labels,
        rect = {'a': (0.0, 1.0), 'b': (0.0, 1.0)},
        center = center,
        sinks = sinks,
        children = list(children),
        tangency_found = True,
        sink_verified = verified,
        precision_exhausted = exhausted,
    )


def test_nh_sample_takes_deepest_verified_boxes():
    deep = _node(2, ((4, 2), (3, 1)))
    first = _node(1, ((4, 2),), children=[deep])
    unverified = _node(2, ((5, 3), (3, 1)), verified=False)
    second = _node(1, ((5, 3),), children=[unverified])
    exhausted = _node(1, ((6, 3),), exhausted=True)
    root = BoxNode(generation=0, labels=(), rect={}, children=[first, second, exhausted])

    samples = nh_sample(root)
    assert [s.labels for s in samples] == [deep.labels, second.labels]
    assert [s.generation for s in samples] == [2, 1]
    assert len(samples[0].sinks) == 2
    assert root.depth == 2


def test_nh_sample_of_empty_tree():
    assert nh_sample(BoxNode(generation=0, labels=(), rect={})) == []


def test_next_generation_below_precision_floor():
    wide = _node(2, ((4, 2), (3, 1)))
    wide.rect = {'a': (1.0, 1.001), 'b': (0.0, 1.0)}
    assert not _below_floor(wide, 'a', (2, 6))
    assert not wide.precision_exhausted

    narrow = _node(2, ((4, 2), (3, 1)))
    narrow.rect = {'a': (1.0, 1.0 + 1e-11), 'b': (0.0, 1.0)}
    assert _below_floor(narrow, 'a', (4, 6))
    assert narrow.precision_exhausted

    with precision.precision('extended'):
        again = _node(2, ((4, 2), (3, 1)))
        again.rect = {'a': (1.0, 1.0 + 1e-11), 'b': (0.0, 1.0)}
        assert not _below_floor(again, 'a', (4, 6))


def test_growth_closes_subtrees_it_cannot_extend():
    names = ('a', 'b')
    narrow = _node(2, ((4, 2), (3, 1)))
    narrow.rect = {'a': (1.0, 1.0 + 1e-11), 'b': (0.0, 1.0)}
    _grow(None, narrow, 3, (4, 6), 3, None, DEFAULT_OPTIONS, names)
    assert narrow.closed and narrow.precision_exhausted and narrow.children == []

    bare = _node(2, ((4, 2), (3, 1)))
    _grow(None, bare, 3, (2, 6), 3, None, DEFAULT_OPTIONS, names)
    assert bare.closed and not bare.precision_exhausted

    done = _node(3, ((4, 2), (3, 1), (2, 1)))
    _grow(None, done, 3, (2, 6), 3, None, DEFAULT_OPTIONS, names)
    assert not done.closed

    root = BoxNode(generation=0, labels=(), rect={}, children=[bare, narrow])
    assert root.exhausted and not bare.exhausted


def test_box_record_nests_children():
    tree = _node(1, ((4, 2),), children=[_node(2, ((4, 2), (3, 1)))])
    record = tree.record()
    assert record['labels'] == [[4, 2]]
    assert record['children'][0]['generation'] == 2
    assert precision.get_precision() == 'double'


# Strong sinks and scanning

def test_strong_sink_at_the_window_parameter(henon):
    window = find_window(henon, henon.params(), 6, 3, FixedTips(), guess=4.0**-6)
    curve = strong_sink_curve(henon, window, (0.0, 0.0), 1)
    assert len(curve) == 1
    point = curve.points[0]
    assert point.sa == pytest.approx(window.trace_zero, abs=1e-3 * window.width)
    assert point.strong
    assert point.trace_slope != 0.0
    assert curve.rows()[0]['strong']
    assert len(curve.slopes()) == 0


def test_strong_sink_curve_preconditions(henon):
    from dataclasses import replace

    window = find_window(henon, henon.params(), 6, 3, FixedTips(), guess=4.0**-6)
    with pytest.raises(PreconditionError):
        strong_sink_curve(henon, window, (0.0, 0.1), 0)
    with pytest.raises(PreconditionError):
        strong_sink_curve(henon, replace(window, trace_zero=None), (0.0, 0.1), 3)


def test_scanner_preserves_order():
    assert Scanner()(abs, [-1, 2, -3]) == [1, 2, 3]
    assert Scanner(show_progress=True, desc='abs')(abs, [-4, 5]) == [4, 5]


def test_scanner_through_a_pool():
    from multiprocessing.pool import Pool

    with Pool(2) as pool:
        assert Scanner(pool=pool)(abs, range(-3, 1)) == [3, 2, 1, 0]


# Henon unfolding at b = 0.05

@pytest.fixture(scope='module')
def unfolded():
    fam = henon2(2.0, 0.05)
    curve = primary_curve(fam, fam.params(), np.linspace(0.049, 0.051, 5), guess=2.0)
    record = curve.records[2]
    N = return_time(fam, record.param, record)
    return fam, curve, N


@pytest.fixture(scope='module')
def box_tree(unfolded):
    fam, curve, N = unfolded
    return build_boxes(fam, curve, 0.05, (4, 6), N, generations=3, spread=1e-3)


@pytest.mark.slow
def test_henon_window_widths_scale_with_mu(unfolded):
    fam, curve, N = unfolded
    windows = sink_window_scan(fam, curve, 0.05, (5, 9), N)
    ns = [w.n for w in windows]
    assert len(ns) >= 5
    assert ns == list(range(ns[0], ns[0] + len(ns)))
    slope = np.polyfit(ns, np.log([w.width for w in windows]), 1)[0]
    assert slope == pytest.approx(-2 * np.log(abs(windows[0].mu)), rel=0.2)


@pytest.mark.slow
def test_henon_center_slope(unfolded):
    fam, curve, N = unfolded
    slope = center_slope(fam, curve, 0.05, 7, N, h=1e-4)
    assert slope.ratio == pytest.approx(1.0, abs=0.3)


@pytest.mark.slow
def test_henon_trace_slopes_grow_like_mu_squared(unfolded):
    fam, curve, N = unfolded
    windows = sink_window_scan(fam, curve, 0.05, (5, 8), N)
    assert len(windows) >= 2
    slopes: dict[int, float] = {}
    for w in windows:
        assert w.trace_zero is not None
        assert w.a_lo < w.trace_zero < w.a_hi
        sinks = strong_sink_curve(fam, w, (0.05, 0.05), 1)
        slopes[w.n] = abs(sinks.points[0].trace_slope)
    mu = abs(windows[0].mu)
    pairs = [(n, n + 1) for n in slopes if n + 1 in slopes]
    assert pairs
    for n, m in pairs:
        assert slopes[m] / slopes[n] == pytest.approx(mu**2, rel=0.25)


@pytest.mark.slow
def test_henon_secondary_tangencies_cross_their_windows(box_tree):
    first = [node for node in box_tree.children if node.tangency is not None]
    assert len(first) >= 2
    for node in first:
        assert node.window.a_lo <= float(node.center['a']) <= node.window.a_hi
    ratios = [node.tangency.n0 / node.tangency.n for node in first]
    assert max(ratios) - min(ratios) <= 0.15


@pytest.mark.slow
def test_henon_second_generation_has_two_sinks(box_tree):
    second = [node for node in box_tree.walk() if node.generation == 2 and node.sink_verified]
    assert second
    sinks = second[0].sinks
    assert len({s.period for s in sinks}) == 2
    assert all(s.residual <= 1e-10 and s.max_modulus < 1.0 for s in sinks)
    for node in second:
        assert any(parent.contains(node) for parent in box_tree.children)
    # a third generation is flagged when double precision runs out
    assert box_tree.depth >= 3 or box_tree.exhausted
