import numpy as np
import pytest

from src.errors import DegenerateFoldError, PreconditionError, UnsupportedOperation
from src.families import diagonal_linear, henon2
from src.manifolds import (
    HORIZONTAL,
    MINUS,
    PLUS,
    VERTICAL,
    Frame,
    GraphLeaf,
    ManifoldArc,
    fold_points,
    grow_stable,
    grow_unstable,
    local_stable_leaf,
    pull_back,
    stable_leaf_stack,
    tube_distance,
    unstable_chart,
)
from src.manifolds import arc as arc_module
from src.orbits import find_periodic
from src.tangency import HenonUnfolding

from conftest import flat_leaf


@pytest.fixture
def linear():
    fam = diagonal_linear(0.5, 2.0)
    p = fam.params()
    return fam, p, find_periodic(fam, p, 1, (0.0, 0.0))


# Arcs

def test_linear_unstable_arc_is_the_y_axis(linear):
    fam, p, saddle = linear
    arc = grow_unstable(fam, p, saddle, budget=3.0)
    assert np.max(np.abs(arc.positions[:, 0])) < 1e-12
    assert 3.0 <= arc.length <= 3.0 + arc.h_max
    assert np.all(np.diff(arc.arclength) <= arc.h_max + 1e-12)
    assert tube_distance(arc) < arc.h_max


def test_linear_stable_arc_is_the_x_axis(linear):
    fam, p, saddle = linear
    arc = grow_stable(fam, p, saddle, budget=2.0, leg=MINUS)
    assert np.max(np.abs(arc.positions[:, 1])) < 1e-12
    assert arc.length >= 2.0


def test_zero_budget_keeps_the_seed_segment(linear):
    fam, p, saddle = linear
    arc = grow_unstable(fam, p, saddle, budget=0.0)
    assert len(arc) > 1
    assert np.all(arc.depth == 0)
    assert arc.near_seed


@pytest.mark.parametrize('mu', [2.0, 8.0])
def test_seed_segment_ends_eps_from_the_saddle(mu):
    fam = diagonal_linear(0.5, mu)
    p = fam.params()
    saddle = find_periodic(fam, p, 1, (0.0, 0.0))
    chart = unstable_chart(fam, p, saddle, eps=1e-8)
    assert chart.eps == pytest.approx(1e-8 / mu)
    X, _ = chart.seed(np.array([0.0, 1.0]))
    assert np.linalg.norm(X[1]) == pytest.approx(1e-8, rel=1e-9)


def test_unresolved_intervals_are_counted(henon, monkeypatch):
    monkeypatch.setattr(arc_module, 'RESOLUTION_GAP', 1 / 64)
    p = henon.params()
    saddle = find_periodic(henon, p, 1, (-2.0, -2.0))
    arc = grow_unstable(henon, p, saddle, budget=6.0)
    assert arc.unresolved > 0


def test_negative_budget_rejected(linear):
    fam, p, saddle = linear
    with pytest.raises(PreconditionError):
        grow_unstable(fam, p, saddle, budget=-1.0)


def test_stable_arc_needs_an_inverse(henon):
    p = henon.params()
    saddle = find_periodic(henon, p, 1, (-2.0, -2.0))
    with pytest.raises(UnsupportedOperation):
        grow_stable(henon, p, saddle, budget=1.0)


def test_henon_unstable_manifold_lies_on_parabola(henon):
    # at b = 0 every image point satisfies x = 2 - y^2
    p = henon.params()
    saddle = find_periodic(henon, p, 1, (-2.0, -2.0))
    for leg in (PLUS, MINUS):
        arc = grow_unstable(henon, p, saddle, budget=3.0, leg=leg)
        X = arc.positions
        assert np.max(np.abs(X[:, 0] - (2.0 - X[:, 1]**2))) < 1e-6


def test_henon_unstable_fold_at_the_tip(henon):
    p = henon.params()
    saddle = find_periodic(henon, p, 1, (-2.0, -2.0))
    folds = [
        fold
        for leg in (PLUS, MINUS)
        for fold in fold_points(grow_unstable(henon, p, saddle, budget=6.0, leg=leg), VERTICAL)
    ]
    assert folds
    tip = min(folds, key=lambda f: np.linalg.norm(f.position - [2.0, 0.0]))
    assert np.allclose(tip.position, [2.0, 0.0], atol=1e-6)
    assert tip.q == pytest.approx(-1.0, abs=0.05)


# Folds of explicit arcs

def test_parabola_has_one_horizontal_fold():
    x = np.linspace(-1.0, 1.0, 201)
    arc = ManifoldArc.from_points(np.stack([x, 1.0 - x**2], axis=1))
    folds = fold_points(arc, HORIZONTAL)
    assert len(folds) == 1
    assert np.allclose(folds[0].position, [0.0, 1.0], atol=1e-6)
    assert folds[0].q == pytest.approx(-1.0, abs=1e-2)
    assert fold_points(arc, VERTICAL) == []


def test_straight_segment_has_no_folds():
    t = np.linspace(0.0, 1.0, 50)
    arc = ManifoldArc.from_points(np.stack([t, 2 * t], axis=1))
    assert fold_points(arc, HORIZONTAL) == []
    assert fold_points(arc, VERTICAL) == []


def _peak(points, arclength, rising):
    """
    Arc with given vertices and arclengths whose tangents rise at 45 degrees
    where rising is set and fall otherwise.
    """
    ell = np.asarray(arclength, dtype=float)
    T = np.array([[1.0, 1.0] if r else [1.0, -1.0] for r in rising]) / np.sqrt(2.0)
    return ManifoldArc(
        positions = np.asarray(points, dtype=float),
        arclength = ell,
        tangents = T,
        curvature = np.zeros(len(ell)),
        depth = np.zeros(len(ell), dtype=int),
        params = ell.copy(),
    )


def test_fold_on_repeated_vertices():
    r = np.sqrt(2.0)
    arc = _peak(
        [(-1, 0), (0, 1), (0, 1), (0, 1), (1, 0)],
        [0.0, r, r, r, 2 * r],
        [True, True, False, False, False],
    )
    folds = fold_points(arc, HORIZONTAL)
    assert len(folds) == 1
    assert np.allclose(folds[0].position, [0.0, 1.0])
    assert folds[0].q == pytest.approx(-0.5)


def test_fold_without_enough_distinct_samples():
    arc = _peak(
        [(0, 1), (0, 1), (0, 1), (1, 0)],
        [0.0, 0.0, 0.0, np.sqrt(2.0)],
        [True, True, False, False],
    )
    with pytest.raises(DegenerateFoldError):
        fold_points(arc, HORIZONTAL)
    assert fold_points(arc, HORIZONTAL, keep=lambda x: x[1] < 0.5) == []
    assert fold_points(arc, HORIZONTAL, skip_degenerate=True) == []


def test_fold_roles_are_checked():
    x = np.linspace(-1.0, 1.0, 101)
    fold = fold_points(ManifoldArc.from_points(np.stack([x, -x**2], axis=1)), HORIZONTAL)[0]
    assert fold.tagged('z1').role == 'z1'
    with pytest.raises(PreconditionError):
        fold.tagged('tip')


# Leaves

def test_graph_leaf_value_outside_domain_is_nan():
    leaf = flat_leaf()
    assert np.isnan(leaf.value(2.0))
    assert leaf.value(0.3) == pytest.approx(0.0)
    with pytest.raises(PreconditionError):
        GraphLeaf(Frame.horizontal(), np.array([0.0, 0.0]), np.array([1.0, 2.0]))


def test_vertical_frame_round_trip():
    frame = Frame.vertical((2.0, 0.0))
    X = frame.to_phase(np.array([0.5]), np.array([0.25]))
    assert np.allclose(X, [[1.75, 0.5]])
    s, w = frame.to_frame(X)
    assert np.allclose([s[0], w[0]], [0.5, 0.25])


def test_henon_local_stable_leaf_is_vertical_line(henon):
    # at b = 0 the line x = -2 is mapped onto the saddle
    p = henon.params()
    saddle = find_periodic(henon, p, 1, (-2.0, -2.0))
    leaf = local_stable_leaf(henon, p, saddle)
    assert leaf.height < 1e-12
    assert np.allclose(leaf.points()[:, 0], -2.0)


def test_linear_leaf_stack_heights_halve(linear):
    fam, p, saddle = linear
    sigma = np.linspace(-1.0, 1.0, 21)
    base = GraphLeaf(Frame.horizontal(), sigma, np.ones_like(sigma))
    stack = stable_leaf_stack(fam, p, saddle, base, count=4, reach=1.0, local=flat_leaf())
    assert stack.indices == [1, 2, 3, 4]
    assert stack.heights == pytest.approx([0.5, 0.25, 0.125, 0.0625], rel=1e-9)
    assert stack.ratios() == pytest.approx([0.5] * 3, rel=1e-9)
    assert not stack.truncated


def test_leaf_stack_truncates_beyond_reach(linear):
    fam, p, saddle = linear
    sigma = np.linspace(-1.0, 1.0, 21)
    base = GraphLeaf(Frame.horizontal(), sigma, np.full_like(sigma, 4.0))
    stack = stable_leaf_stack(fam, p, saddle, base, count=3, reach=1.0, local=flat_leaf())
    # W_1 sits at height 2, outside the scan
    assert len(stack) == 0
    assert stack.truncated


def test_pull_back_of_horizontal_leaf(linear):
    fam, p, _ = linear
    sigma = np.linspace(-1.0, 1.0, 21)
    leaf = GraphLeaf(Frame.horizontal(), sigma, np.ones_like(sigma))
    args = np.linspace(-1.5, 1.5, 31)
    once = pull_back(fam, p, leaf, Frame.horizontal(), 1, args, np.linspace(0.0, 1.0, 11))
    assert once.index == 1
    assert np.allclose(once.w, 0.5, atol=1e-12)
    twice = pull_back(fam, p, leaf, Frame.horizontal(), 2, args, np.linspace(0.0, 1.0, 11))
    assert np.allclose(twice.w, 0.25, atol=1e-12)
    assert pull_back(fam, p, leaf, Frame.horizontal(), 1, args, np.linspace(0.6, 1.0, 5)) is None


# Henon at b > 0

@pytest.mark.slow
def test_henon_unstable_arc_stays_in_its_tube():
    fam = henon2(2.0, 0.05)
    p = fam.params()
    saddle = find_periodic(fam, p, 1, (-2.0, -2.0))
    arc = grow_unstable(fam, p, saddle, budget=6.0)
    assert arc.length >= 6.0
    assert arc.unresolved == 0
    assert tube_distance(arc) < arc.h_max


@pytest.mark.slow
def test_henon_stable_arc_converges_to_the_saddle():
    fam = henon2(1.4, 0.3)
    p = fam.params()
    saddle = find_periodic(fam, p, 1, (0.88, 0.88))
    arc = grow_stable(fam, p, saddle, budget=2.0)
    assert arc.length >= 2.0
    assert tube_distance(arc) < arc.h_max
    X = arc.positions[arc.arclength <= 0.5]
    for _ in range(20):
        X = fam.map(p, X)
    assert np.max(np.linalg.norm(X - saddle.point, axis=1)) < 1e-3


@pytest.mark.slow
def test_henon_leaf_stack_ratios_follow_mu():
    fam = henon2(2.0, 0.05)
    unfolding = HenonUnfolding(fam, fam.params())
    stack = unfolding.stack(5)
    mu = abs(unfolding.saddle.multipliers.mu)
    assert len(stack) >= 3
    ratios = stack.ratios()
    assert np.all((ratios >= 1 / (2 * mu)) & (ratios <= 2 / mu))
