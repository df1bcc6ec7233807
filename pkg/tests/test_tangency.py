from types import SimpleNamespace

import numpy as np
import pytest

from src.errors import (
    BracketError,
    ExtrapolationRefused,
    PreconditionError,
    TangentialIntersectionError,
)
from src.families import henon2, quad_henon_like
from src.manifolds import HORIZONTAL, VERTICAL, FoldPoint, Frame, GraphLeaf, StableLeafStack
from src.tangency import (
    FoldSelector,
    LeafSelector,
    TangencyProblem,
    chain_stack,
    continue_double_tangency,
    continue_tangency,
    double_tangency,
    fold_chain,
    primary_curve,
    find_bracket,
    gap_curvature,
    solve_tangency,
    stack_level_leaf,
    tangency_gap,
    unfolding_conditions,
)
from src.tangency.secondary import _newton_pair

from conftest import LineFold, ParabolaFolds, flat_leaf


# Gaps

def test_gap_and_curvature_against_flat_leaf():
    fold = FoldPoint(position=np.array([0.2, 0.3]), axis=HORIZONTAL, q=-1.0)
    assert tangency_gap(fold, flat_leaf()) == pytest.approx(0.3)
    assert gap_curvature(fold, flat_leaf()) == pytest.approx(-2.0)


def test_gap_in_vertical_frame_measures_towards_negative_x():
    sigma = np.linspace(-1.0, 1.0, 11)
    leaf = GraphLeaf(Frame.vertical((2.0, 0.0)), sigma, np.zeros_like(sigma))
    fold = FoldPoint(position=np.array([1.9, 0.0]), axis=VERTICAL, q=-1.0)
    assert tangency_gap(fold, leaf) == pytest.approx(0.1)


def test_gap_refuses_to_extrapolate():
    fold = FoldPoint(position=np.array([3.0, 0.0]), axis=HORIZONTAL, q=-1.0)
    with pytest.raises(ExtrapolationRefused):
        tangency_gap(fold, flat_leaf())


# Brackets and one-parameter solves

def test_find_bracket_grows_until_sign_change():
    lo, hi = find_bracket(lambda x: x - 1.3, 1.0, 0.1)
    assert lo <= 1.3 <= hi


def test_find_bracket_without_root():
    with pytest.raises(BracketError):
        find_bracket(lambda x: x**2 + 1.0, 0.0, 0.1, max_steps=10)


def test_solve_synthetic_tangency(henon):
    record = solve_tangency(
        henon, henon.params(), 'a', (1.0, 2.0),
        fold_selector = ParabolaFolds('a', 1.3),
        leaf_selector = flat_leaf,
        n = 5,
    )
    assert record.value == pytest.approx(1.3, abs=1e-10)
    assert abs(record.gap) <= 1e-10
    assert record.gapQ == pytest.approx(-2.0)
    assert not record.degenerate
    assert record.n == 5
    assert record.record()['type'] == 'primary'


def test_solve_rejects_same_sign_bracket(henon):
    with pytest.raises(BracketError):
        solve_tangency(henon, henon.params(), 'a', (1.5, 2.0), ParabolaFolds('a', 1.3), flat_leaf)


def test_solve_rejects_nonpositive_tol(henon):
    with pytest.raises(PreconditionError):
        solve_tangency(henon, henon.params(), 'a', (1.0, 2.0), ParabolaFolds('a', 1.3), flat_leaf, tol=0.0)


def test_problem_gap_follows_free_parameter(henon):
    problem = TangencyProblem(henon, henon.params(), 'a', ParabolaFolds('a', 1.0), flat_leaf)
    assert problem.gap_at(1.25) == pytest.approx(0.25)
    assert problem.at(1.25)['b'] == 0.0


# Continuation

@pytest.fixture
def line_start(henon):
    # gap = a - 2b vanishes along a = 2b
    return solve_tangency(
        henon, henon.params(b=0.1), 'a', (0.0, 1.0),
        fold_selector = LineFold(2.0),
        leaf_selector = flat_leaf,
    )


def test_zero_steps_returns_start(henon, line_start):
    curve = continue_tangency(henon, line_start, ('a', 'b'), steps=0, max_step=0.05)
    assert len(curve) == 1
    assert curve.records[0] is line_start


def test_continuation_follows_straight_curve(henon, line_start):
    curve = continue_tangency(henon, line_start, ('a', 'b'), steps=5, max_step=0.05)
    assert len(curve) == 6
    assert not curve.truncated
    a, b = curve.values('a'), curve.values('b')
    assert np.allclose(a, 2 * b, atol=1e-9)
    assert np.all(np.diff(b) > 0)
    assert curve.slopes[0] == pytest.approx(2.0)
    assert curve.free_at(0.15) == pytest.approx(0.3, abs=1e-9)


def test_continuation_reverses_with_direction(henon, line_start):
    curve = continue_tangency(henon, line_start, ('a', 'b'), steps=3, max_step=0.02, direction=-1)
    assert np.all(np.diff(curve.values('b')) < 0)


def test_continuation_stops_at_bound(henon, line_start):
    curve = continue_tangency(
        henon, line_start, ('a', 'b'), steps=50, max_step=0.05,
        bounds = (None, (0.0, 0.2)),
    )
    assert len(curve) < 51
    assert curve.values('b')[-1] == pytest.approx(0.2, abs=1e-9)


def test_continuation_needs_a_problem(henon, line_start):
    from dataclasses import replace

    with pytest.raises(PreconditionError):
        continue_tangency(henon, replace(line_start, problem=None), ('a', 'b'), 1, 0.05)


def test_curve_rows_carry_both_parameters(henon, line_start):
    curve = continue_tangency(henon, line_start, ('a', 'b'), steps=2, max_step=0.05)
    rows = curve.rows()
    assert [row['step'] for row in rows] == [0, 1, 2]
    assert set(rows[0]) >= {'a', 'b', 'gap', 'gapQ', 'slope'}


# Double tangencies

def _seeds(fam):
    first = solve_tangency(fam, fam.params(), 'a', (0.0, 2.5), ParabolaFolds('a', 1.0), flat_leaf)
    second = solve_tangency(fam, fam.params(), 'b', (0.0, 3.0), ParabolaFolds('b', 2.0), flat_leaf)
    return first, second


def test_double_tangency_of_crossing_conditions(henon):
    point = double_tangency(henon, _seeds(henon))
    assert float(point['a']) == pytest.approx(1.0, abs=1e-10)
    assert float(point['b']) == pytest.approx(2.0, abs=1e-10)


def test_parallel_conditions_do_not_cross(henon):
    first = solve_tangency(henon, henon.params(), 'a', (0.0, 2.5), ParabolaFolds('a', 1.0), flat_leaf)
    second = solve_tangency(henon, henon.params(), 'a', (1.5, 2.5), ParabolaFolds('a', 2.0), flat_leaf)
    with pytest.raises(TangentialIntersectionError):
        double_tangency(henon, (first, second))


def test_double_tangency_continues_in_tau():
    fam = quad_henon_like(2.0, 0.0, 0.0)
    points = continue_double_tangency(fam, _seeds(fam), [0.1, 0.2])
    assert [float(p['tau']) for p in points] == [0.1, 0.2]
    for p in points:
        assert (float(p['a']), float(p['b'])) == pytest.approx((1.0, 2.0), abs=1e-10)


def test_double_tangency_continuation_needs_tau(henon):
    with pytest.raises(PreconditionError):
        continue_double_tangency(henon, _seeds(henon), [0.1])


# Unfolding conditions

def test_unfolding_conditions_on_synthetic_record():
    fam = henon2(1.9, 0.0)
    record = solve_tangency(fam, fam.params(), 'a', (1.5, 2.0), ParabolaFolds('a', 1.9), flat_leaf)
    report = unfolding_conditions(fam, record)
    assert report.dgap_dfree == pytest.approx(1.0, rel=1e-6)
    assert report.ok
    assert abs(report.mu) > 1.0


# Hénon primary tangency and fold chains

def test_fold_chain_needs_positive_orders(henon):
    with pytest.raises(PreconditionError):
        fold_chain(henon, henon.params(), 0, 3)
    with pytest.raises(PreconditionError):
        fold_chain(henon, henon.params(), 5, 0)


@pytest.mark.slow
def test_henon_primary_tangency_near_two():
    fam = henon2(2.0, 0.05)
    curve = primary_curve(fam, fam.params(), [0.05], guess=2.0)
    assert len(curve) == 1
    record = curve.records[0]
    assert abs(record.value - 2.0) < 0.5
    assert abs(record.gap) <= 1e-8
    assert not record.degenerate


def test_chain_stack_needs_an_order(henon):
    with pytest.raises(PreconditionError):
        chain_stack(henon, henon.params(), ())


def test_shallow_levels_fall_back_to_direct_preimages():
    marker = flat_leaf()
    unfolding = SimpleNamespace(
        saddle = SimpleNamespace(period=1),
        level_leaf = lambda k: marker,
    )
    empty = StableLeafStack(base=flat_leaf(), local=flat_leaf())
    assert stack_level_leaf(unfolding, empty, 5) is marker

    first = GraphLeaf(Frame.horizontal(), np.linspace(-1.0, 1.0, 21), np.ones(21), index=1)
    stack = StableLeafStack(base=flat_leaf(), local=flat_leaf(), leaves=[first], requested=1)
    # W_1 needs k + 1 - 1 >= 2 pull-back steps
    assert stack_level_leaf(unfolding, stack, 1) is marker


@pytest.mark.slow
def test_henon_tangency_curve_extrapolates_to_two():
    fam = henon2(2.0, 0.05)
    start = primary_curve(fam, fam.params(), [0.05], guess=2.0).records[0]
    curve = continue_tangency(
        fam, start, ('a', 'b'),
        steps = 80,
        max_step = 5e-3,
        direction = -1,
        bounds = (None, (0.005, 0.05)),
    )
    assert not curve.truncated
    bs, values = curve.values('b'), curve.values('a')
    assert bs.min() == pytest.approx(0.005, abs=1e-3)
    order = np.argsort(bs)
    (b0, a0), (b1, a1) = (bs[order[0]], values[order[0]]), (bs[order[1]], values[order[1]])
    assert a0 - b0 * (a1 - a0) / (b1 - b0) == pytest.approx(2.0, abs=1e-2)


def _henon_component(fam, fold: int, guess: float):
    fold_selector, leaf_selector = FoldSelector(index=fold), LeafSelector()
    problem = TangencyProblem(fam, fam.params(), 'a', fold_selector, leaf_selector)
    bracket = find_bracket(problem.gap_at, guess, 1e-3)
    return solve_tangency(fam, fam.params(), 'a', bracket, fold_selector, leaf_selector)


@pytest.mark.slow
def test_henon_double_tangency_is_isolated():
    fam = henon2(2.0, 0.05)
    seeds = (_henon_component(fam, 1, 2.0), _henon_component(fam, 0, 2.0))
    point = double_tangency(fam, seeds)
    problems = [s.problem for s in seeds]
    assert max(abs(problem.gap(point)) for problem in problems) <= 1e-9

    rng = np.random.default_rng(0)
    x = np.array([float(point['a']), float(point['b'])])
    for _ in range(10):
        again = _newton_pair(problems, point, ('a', 'b'), x + rng.normal(scale=1e-4, size=2), 1e-10)
        assert float(again['a']) == pytest.approx(x[0], abs=1e-7)
        assert float(again['b']) == pytest.approx(x[1], abs=1e-7)
