import numpy as np
import pytest

from src import precision
from src.errors import PreconditionError, SolverFailure
from src.families import ParamPoint, diagonal_linear, henon2
from src import orbits
from src.orbits import (
    PERIOD_DOUBLING,
    SADDLE,
    SINK,
    PhaseBox,
    contraction_certificate,
    continue_orbit,
    cyclic_shift,
    find_periodic,
    fold_distance,
    orbit_from_point,
    same_orbit,
    sink_box,
)


def test_saddle_of_henon_at_tangency(henon):
    saddle = find_periodic(henon, henon.params(), 1, (-2.0, -2.0))
    assert np.allclose(precision.to_float(saddle.point), [-2.0, -2.0])
    assert sorted(saddle.moduli) == pytest.approx([0.0, 4.0], abs=1e-12)
    assert saddle.stability == SADDLE


def test_other_fixed_point_has_negative_multiplier(henon):
    orbit = find_periodic(henon, henon.params(), 1, (1.0, 1.0))
    assert np.allclose(precision.to_float(orbit.point), [1.0, 1.0])
    assert orbit.multipliers.mu == pytest.approx(-2.0)
    assert orbit.stability == SADDLE


def test_superstable_two_cycle():
    fam = henon2(1.0, 0.0)
    orbit = find_periodic(fam, fam.params(), 2, (0.1, 0.9))
    points = {tuple(np.round(precision.to_float(x), 12)) for x in orbit.points}
    assert points == {(0.0, 1.0), (1.0, 0.0)}
    assert abs(orbit.multipliers.product()) < 1e-12
    assert orbit.stability == SINK


def test_orbit_record_and_cyclic_shift():
    fam = henon2(1.0, 0.0)
    orbit = find_periodic(fam, fam.params(), 2, (0.1, 0.9))
    record = orbit.record()
    assert record['period'] == 2
    assert record['class'] == SINK
    assert np.allclose(cyclic_shift(orbit, 1)[0], orbit.points[1])


def test_same_orbit_ignores_starting_point():
    fam = henon2(1.0, 0.0)
    u = find_periodic(fam, fam.params(), 2, (0.1, 0.9))
    v = find_periodic(fam, fam.params(), 2, (0.9, 0.1))
    assert same_orbit(u, v, 1e-10)


def test_find_periodic_preconditions(henon):
    with pytest.raises(PreconditionError):
        find_periodic(henon, henon.params(), 0, (0.0, 0.0))
    with pytest.raises(PreconditionError):
        find_periodic(henon, henon.params(), 1, (0.0, 0.0), tol=0.0)


def test_find_periodic_reports_nonconvergence():
    fam = henon2(1.4, 0.3)
    with pytest.raises(SolverFailure) as info:
        find_periodic(fam, fam.params(), 7, (0.3, 0.1), max_iter=1)
    assert info.value.residual > 0.0


def test_extended_precision_orbit(henon):
    with precision.precision('extended'):
        saddle = find_periodic(henon, henon.params(), 1, (-2.1, -1.9), tol=1e-30)
        assert saddle.residual < 1e-30
    assert precision.get_precision() == 'double'


def test_long_sink_keeps_its_tiny_multiplier():
    # det of the 100-step monodromy is 2.5e-400, below the smallest double
    fam = diagonal_linear(0.25, 1e-3)
    orbit = orbit_from_point(fam, fam.params(), np.zeros(2), 100)
    assert orbit.det_sign == 1
    assert orbit.log_abs_det == pytest.approx(100 * np.log(2.5e-4))
    assert orbit.multipliers.multipliers[1].real == pytest.approx(1e-300, rel=1e-9)
    assert orbit.multipliers.multipliers[0].real == pytest.approx(0.25 ** 100, rel=1e-9)
    assert orbit.det == 0.0
    assert orbit.stability == SINK
    assert orbit.record()['log_abs_det'] == pytest.approx(100 * np.log(2.5e-4))


# Continuation

def test_constant_path_gives_identical_orbits(henon):
    p = henon.params()
    saddle = find_periodic(henon, p, 1, (-2.0, -2.0))
    branch = continue_orbit(henon, saddle, [p, p, p], max_step=0.1)
    assert len(branch) == 3
    for orbit in branch.orbits:
        assert same_orbit(orbit, saddle, 1e-12)


def test_continuation_flags_period_doubling():
    # the period-1 sink of x -> a - x^2 doubles at a = 3/4
    fam = henon2(0.5, 0.0)
    start = ParamPoint.of(a=0.5, b=0.0)
    x = (-1.0 + np.sqrt(1.0 + 4 * 0.5)) / 2
    sink = find_periodic(fam, start, 1, (x, x))
    assert sink.stability == SINK

    branch = continue_orbit(fam, sink, [start, ParamPoint.of(a=1.0, b=0.0)], max_step=0.02)
    assert not branch.truncated
    kinds = [kind for _, kind in branch.crossings]
    assert PERIOD_DOUBLING in kinds
    i = next(i for i, kind in branch.crossings if kind == PERIOD_DOUBLING)
    a_before, a_after = float(branch.params[i - 1]['a']), float(branch.params[i]['a'])
    assert a_before <= 0.75 <= a_after


def test_continuation_stops_at_a_saddle_node():
    # the sink of x -> a - x^2 meets the saddle at a = -1/4, x = -1/2
    fam = henon2(0.0, 0.0)
    start = ParamPoint.of(a=0.0, b=0.0)
    sink = find_periodic(fam, start, 1, (0.0, 0.0))
    branch = continue_orbit(fam, sink, [start, ParamPoint.of(a=-0.5, b=0.0)], max_step=0.02)
    assert branch.truncated and branch.fold
    last = branch.orbits[-1]
    assert float(last.param['a']) == pytest.approx(-0.25, abs=0.01)
    assert fold_distance(fam, last) < orbits.FOLD_TOL


def test_stalled_continuation_is_not_a_fold(monkeypatch):
    fam = henon2(2.0, 0.0)
    start = fam.params()
    saddle = find_periodic(fam, start, 1, (-2.0, -2.0))
    solve = orbits.find_periodic

    def refuse_below(fam, p, period, x0, **kwargs):
        if float(p['a']) < 1.9:
            raise SolverFailure("no convergence")
        return solve(fam, p, period, x0, **kwargs)

    monkeypatch.setattr(orbits, 'find_periodic', refuse_below)
    assert fold_distance(fam, saddle) > orbits.FOLD_TOL
    with pytest.raises(SolverFailure, match="away from a fold"):
        continue_orbit(fam, saddle, [start, ParamPoint.of(a=1.8, b=0.0)], max_step=0.02)


def test_continuation_needs_converged_start(henon):
    saddle = find_periodic(henon, henon.params(), 1, (-2.0, -2.0))
    with pytest.raises(PreconditionError):
        continue_orbit(henon, saddle, [], max_step=0.1)
    with pytest.raises(PreconditionError):
        continue_orbit(henon, saddle, [henon.params()], max_step=0.0)


# Contraction certificate

def test_linear_contraction_certificate():
    fam = diagonal_linear(0.5, 0.5)
    box = PhaseBox(np.zeros(2), np.ones(2))
    assert contraction_certificate(fam, fam.params(), box, 1)


def test_expanding_map_has_no_certificate():
    fam = diagonal_linear(0.5, 2.0)
    box = PhaseBox(np.zeros(2), np.ones(2))
    assert not contraction_certificate(fam, fam.params(), box, 1)


def test_sink_box_of_superstable_cycle():
    fam = henon2(1.0, 0.0)
    orbit = find_periodic(fam, fam.params(), 2, (0.1, 0.9))
    box = sink_box(orbit, 0.05)
    assert contraction_certificate(fam, fam.params(), box, 2)


def test_phase_box_round_trip():
    box = PhaseBox.from_bounds([0.0, -1.0], [2.0, 1.0])
    assert np.allclose(box.center, [1.0, 0.0])
    assert np.allclose(box.to_phase(box.to_local(np.array([0.3, 0.4]))), [0.3, 0.4])
