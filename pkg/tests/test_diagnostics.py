import math

import numpy as np
import pytest

from src.errors import EscapeError, PreconditionError
from src.families import diagonal_linear, henon2
from src.diagnostics import (
    FEIGENBAUM_DELTA,
    adding_machine_test,
    band_labels,
    collet_eckmann_test,
    embedded_1d,
    fit_quadratic,
    lyapunov,
    renorm_return_map,
    superstable_cascade,
)
from src.orbits import PhaseBox, find_periodic


# Lyapunov exponents

def test_linear_exponents():
    fam = diagonal_linear(0.5, 2.0)
    spectrum = lyapunov(fam, fam.params(), (0.0, 0.0), iters=500, burn=10)
    assert spectrum.exponents == pytest.approx([math.log(2.0), math.log(0.5)])
    assert spectrum.discrepancy < 1e-12
    assert len(spectrum.rows()) == 100


def test_henon_attractor_exponents():
    fam = henon2(1.4, 0.3)
    spectrum = lyapunov(fam, fam.params(), (0.1, 0.1), iters=20000)
    assert spectrum.top == pytest.approx(0.42, abs=0.02)
    assert sum(spectrum.exponents) == pytest.approx(math.log(0.3), abs=1e-8)
    assert spectrum.sum_error < 1e-8


@pytest.mark.slow
def test_full_quadratic_exponent_is_log2():
    fam = henon2(2.0, 0.0)
    spectrum = lyapunov(fam, fam.params(), (0.3, 0.3), iters=10**7)
    assert spectrum.top == pytest.approx(math.log(2.0), rel=0.01)


def test_exponents_negative_at_a_sink():
    fam = henon2(0.5, 0.3)
    sink = find_periodic(fam, fam.params(), 1, (0.3, 0.3))
    assert sink.is_sink
    spectrum = lyapunov(fam, fam.params(), sink.point + 1e-3, iters=5000)
    assert np.all(spectrum.exponents < 0.0)
    assert spectrum.exponents == pytest.approx([0.5 * math.log(0.3)] * 2, abs=1e-2)


def test_lyapunov_escape():
    fam = henon2(3.0, 0.0)
    with pytest.raises(EscapeError):
        lyapunov(fam, fam.params(), (3.0, 3.0), iters=100, burn=0)


def test_lyapunov_preconditions():
    fam = diagonal_linear(0.5, 2.0)
    with pytest.raises(PreconditionError):
        lyapunov(fam, fam.params(), (0.0, 0.0), iters=1)
    with pytest.raises(PreconditionError):
        lyapunov(fam, fam.params(), (0.0, 0.0), iters=10, burn=-1)


# Collet-Eckmann screen

def test_growth_screen_passes_below_log2():
    fam = diagonal_linear(0.5, 2.0)
    profile = collet_eckmann_test(fam, fam.params(), (0.0, 0.0), (0.0, 1.0), n_max=50, kappa=0.6)
    assert profile.passed
    assert profile.first_failure is None
    assert profile.log_growth[-1] == pytest.approx(50 * math.log(2.0))


def test_growth_screen_fails_above_log2():
    fam = diagonal_linear(0.5, 2.0)
    profile = collet_eckmann_test(fam, fam.params(), (0.0, 0.0), (0.0, 1.0), n_max=50, kappa=0.7)
    assert not profile.passed
    assert profile.first_failure == 1
    assert profile.record()['finite_time_proxy']


def test_growth_screen_needs_unit_vector():
    fam = diagonal_linear(0.5, 2.0)
    with pytest.raises(PreconditionError):
        collet_eckmann_test(fam, fam.params(), (0.0, 0.0), (0.0, 2.0), n_max=5)


# Period-doubling cascade

def test_first_superstable_parameters():
    report = superstable_cascade(2)
    assert report.values[0] == pytest.approx(0.0, abs=1e-12)
    assert report.values[1] == pytest.approx(1.0, abs=1e-12)
    assert report.periods == [1, 2, 4]


def test_cascade_converges_to_accumulation_point():
    report = superstable_cascade(10)
    assert not report.truncated
    assert report.k_max == 10
    assert report.a_inf == pytest.approx(1.401155189, abs=1e-5)
    assert report.ratios[-1] == pytest.approx(FEIGENBAUM_DELTA, rel=0.02)


def test_cascade_of_embedded_henon_matches_quadratic():
    embedded = superstable_cascade(4, f=embedded_1d(henon2(2.0, 0.0)))
    plain = superstable_cascade(4)
    assert embedded.values == pytest.approx(plain.values, abs=1e-12)


def test_cascade_needs_two_levels():
    with pytest.raises(PreconditionError):
        superstable_cascade(1)


def test_embedded_map_restricts_to_diagonal():
    f = embedded_1d(henon2(2.0, 0.1))
    assert f(1.3, 0.4) == pytest.approx(1.3 - 0.16 - 0.04)


# Adding machine

def test_band_labels_split_at_gaps():
    values = np.array([0.0, 0.01, 1.0, 1.01, 0.02, 1.02])
    assert band_labels(values, 2).tolist() == [0, 0, 1, 1, 0, 1]
    assert band_labels(np.linspace(0.0, 1.0, 50), 2) is None


def test_two_cycle_passes_first_level_only():
    fam = henon2(1.0, 0.0)
    assert adding_machine_test(fam, fam.params(), (0.3, 0.3), 1000, k_max=1).passed

    report = adding_machine_test(fam, fam.params(), (0.3, 0.3), 1000, k_max=2)
    assert not report.passed
    assert report.failed_level == 2
    assert report.band_counts[0] == 2


def test_chaotic_orbit_fails_first_level():
    fam = henon2(2.0, 0.0)
    report = adding_machine_test(fam, fam.params(), (0.3, 0.3), 1000, k_max=3)
    assert report.failed_level == 1


@pytest.mark.slow
def test_adding_machine_at_the_accumulation_point():
    a_inf = superstable_cascade(10).a_inf
    fam = henon2(a_inf, 0.0)
    report = adding_machine_test(fam, fam.params(), (0.0, 0.0), 10**6, k_max=6)
    assert report.passed
    assert report.band_counts == [2, 4, 8, 16, 32, 64]


def test_adding_machine_needs_enough_iterates():
    fam = henon2(1.0, 0.0)
    with pytest.raises(PreconditionError):
        adding_machine_test(fam, fam.params(), (0.3, 0.3), 4, k_max=2)


# Return maps

def test_one_step_return_map_is_the_quadratic():
    fam = henon2(1.5, 0.0)
    box = PhaseBox(np.zeros(2), np.ones(2))
    graph = renorm_return_map(fam, fam.params(), box, 1, samples=41)
    assert np.allclose(graph.x_out, 1.5 - graph.x_in**2)
    fit = fit_quadratic(graph)
    assert (fit.c0, fit.c1, fit.c2) == pytest.approx((1.5, 0.0, -1.0), abs=1e-10)
    assert fit.residual < 1e-12


def test_zero_step_return_map_is_identity():
    fam = henon2(1.5, 0.0)
    box = PhaseBox(np.array([0.2, -0.1]), np.array([0.5, 0.5]))
    graph = renorm_return_map(fam, fam.params(), box, 0, samples=11)
    assert np.allclose(graph.x_out, graph.x_in)
    assert not graph.truncated


def test_return_map_drops_escaping_samples():
    fam = henon2(2.0, 0.0)
    box = PhaseBox(np.zeros(2), np.array([5.0, 1.0]))
    graph = renorm_return_map(fam, fam.params(), box, 20, samples=101)
    assert graph.truncated
    assert len(graph) < 101
