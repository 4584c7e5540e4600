import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deltaquench.basis import psi0_squared_even
from deltaquench.spectrum import (
    FINITE,
    STRONG,
    ConvergenceError,
    build_finite_spectrum,
    build_spectrum,
    build_strong_spectrum,
    convergence_probe,
    interlacing_violations,
    strong_overlap,
    strong_overlap_column0,
)

from oracles import central_ratio_exact, dense_spectrum, strong_overlap_closed, strong_overlap_mp


def test_strong_overlap_examples():
    assert strong_overlap(0, 0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)
    assert strong_overlap(2, 0) == pytest.approx(-1 / math.sqrt(3 * math.pi), rel=1e-14)
    assert strong_overlap(0, 2) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-14)


def test_strong_overlap_rejects_odd():
    with pytest.raises(ValueError):
        strong_overlap(1, 0)
    with pytest.raises(ValueError):
        strong_overlap(0, 3)


def test_strong_spectrum_small():
    sp = build_strong_spectrum(1)
    assert sp.energies.tolist() == [1.5]
    assert sp.overlaps()[0, 0] == pytest.approx(math.sqrt(2 / math.pi))
    assert build_strong_spectrum(2).energies.tolist() == [1.5, 3.5]
    assert build_strong_spectrum(5).backend == STRONG


def test_strong_column_squares_match_identity():
    j = np.arange(501)
    col = strong_overlap_column0(2 * j)
    exact = np.array([(2 / math.pi) * float(central_ratio_exact(int(i))) / (2 * i + 1) for i in j])
    assert np.allclose(col**2, exact, rtol=1e-10, atol=0)


def test_strong_column_partial_sums():
    sums = np.cumsum(strong_overlap_column0(2 * np.arange(10**6)) ** 2)
    assert np.all(np.diff(sums) > 0)
    assert sums[-1] <= 1.0
    assert sums[-1] >= 0.999


@pytest.mark.parametrize("m,n", [(0, 0), (2, 4), (10, 30), (40, 2), (200, 200), (120, 198)])
def test_recursion_matches_mpmath(m, n):
    assert strong_overlap(m, n) == pytest.approx(strong_overlap_mp(m, n), rel=1e-10)


def test_recursion_matches_closed_form_grid():
    sp = build_strong_spectrum(101)
    lam = sp.overlaps()
    ref = np.array([[strong_overlap_closed(j, L) for L in range(101)] for j in range(101)])
    assert np.allclose(lam, ref, rtol=1e-10, atol=1e-300)


def test_strong_columns_match_scalar():
    sp = build_strong_spectrum(60)
    cols = sp.overlaps([0, 6, 14])
    for i, n in enumerate([0, 6, 14]):
        for m in (0, 8, 40, 118):
            assert cols[m // 2, i] == pytest.approx(strong_overlap(m, n), rel=1e-12)


@pytest.mark.parametrize("k", [1e-3, 1.0, 10.0, 100.0, 1000.0])
def test_finite_matches_dense(k):
    M = 512
    sp = build_finite_spectrum(k, M)
    e, lam = dense_spectrum(k, M)
    assert np.max(np.abs(sp.energies - e)) <= 1e-9
    assert np.max(np.abs(sp.overlaps() - lam)) <= 1e-9


@pytest.mark.parametrize("k", [1.0, 10.0, 100.0, 1000.0])
def test_interlacing(k):
    sp = build_finite_spectrum(k, 4000)
    assert interlacing_violations(sp).size == 0
    assert np.all(sp.energies[:-1] > sp.unperturbed_energies[:-1])
    assert np.all(sp.energies[:-1] < sp.unperturbed_energies[:-1] + 2)


@settings(max_examples=15, deadline=None)
@given(st.floats(1e-4, 1e5), st.integers(2, 300))
def test_interlacing_property(k, M):
    assert interlacing_violations(build_finite_spectrum(k, M)).size == 0


def test_orthogonality_lowest_quarter():
    sp = build_finite_spectrum(100.0, 2000)
    lam = sp.overlaps()[:500]
    gram = lam @ lam.T
    assert np.max(np.abs(gram - np.eye(500))) <= 1e-8


def test_large_k_ground_level():
    e_small = build_finite_spectrum(1e6, 1000).energies[0]
    e_big = build_finite_spectrum(1e6, 4000).energies[0]
    assert abs(e_big - 1.5) < 0.01
    # truncation bias shrinks with the cutoff
    assert abs(e_big - 1.5) < abs(e_small - 1.5)


def test_first_order_perturbation():
    k = 1e-3
    sp = build_finite_spectrum(k, 4000)
    shift = sp.energies[0] - 0.5
    first = k / math.sqrt(2 * math.pi)
    assert abs(shift - first) < 5 * k**2


def test_weak_coupling_identity():
    sp = build_finite_spectrum(1e-9, 200)
    assert np.allclose(sp.energies, sp.unperturbed_energies, atol=1e-8)
    assert np.allclose(sp.overlaps(), np.eye(200), atol=1e-6)


def test_cross_backend_agreement():
    fin = build_finite_spectrum(1e4, 4000).overlaps(2 * np.arange(11))[:11]
    strong = build_strong_spectrum(11).overlaps()
    assert np.max(np.abs(fin - strong)) <= 0.02


def test_parent_component_positive():
    sp = build_finite_spectrum(10.0, 300)
    assert np.all(np.diag(sp.overlaps()) > 0)


def test_probe_examples():
    zero = convergence_probe(0.0, 100, 200)
    assert zero.energy_deviation == 0 and zero.overlap_deviation == 0
    strong = convergence_probe(math.inf, 100, 400)
    assert strong.energy_deviation == 0
    coarse = convergence_probe(100.0, 250, 1000)
    fine = convergence_probe(100.0, 1000, 4000)
    assert fine.energy_deviation < coarse.energy_deviation
    assert fine.overlap_deviation < coarse.overlap_deviation


def test_probe_tolerance_raises():
    with pytest.raises(ConvergenceError):
        convergence_probe(100.0, 50, 400, tolerance=1e-12)
    with pytest.raises(ValueError):
        convergence_probe(1.0, 100, 100)


@pytest.mark.parametrize("k", [0.0, -1.0, math.inf])
def test_finite_rejects(k):
    with pytest.raises(ValueError):
        build_finite_spectrum(k, 10)


def test_dispatch():
    assert build_spectrum(math.inf, 10).backend == STRONG
    assert build_spectrum(3.0, 10).backend == FINITE


def test_row_normalisation_strong():
    sp = build_strong_spectrum(20000)
    rows = sp.overlaps([0, 2, 4])
    # columns of an orthogonal matrix sum to one in squares; truncation leaves O(M^-1/2)
    assert np.all(np.abs((rows**2).sum(axis=0) - 1) < 0.01)


def test_weyl_bound_for_top_level():
    sp = build_finite_spectrum(50.0, 100)
    bound = sp.unperturbed_energies[-1] + 50.0 * psi0_squared_even(100).sum()
    assert sp.energies[-1] <= bound
