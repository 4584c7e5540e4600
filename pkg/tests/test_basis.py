import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from deltaquench.basis import (
    ORIGIN_PREFACTOR,
    Parity,
    TrapBasis,
    c_coefficient,
    central_ratio,
    energy_unperturbed,
    log_central_ratio,
    psi0_squared_even,
    psi_at_origin,
)

from oracles import central_ratio_exact, psi0_direct


def test_psi_examples():
    assert psi_at_origin(1) == 0.0
    assert psi_at_origin(0) == pytest.approx(0.6316188, abs=1e-7)
    # -(2 pi)^(-1/4) / sqrt(2) = -0.44662192...
    assert psi_at_origin(2) == pytest.approx(-((2 * math.pi) ** -0.25) / math.sqrt(2), rel=1e-14)
    assert psi_at_origin(2) == pytest.approx(-0.4466219, abs=1e-7)


def test_odd_levels_vanish_exactly():
    odd = np.arange(1, 2001, 2)
    assert np.all(psi_at_origin(odd) == 0.0)


def test_energy_examples():
    assert energy_unperturbed(0) == 0.5
    assert energy_unperturbed(2) == 2.5
    assert energy_unperturbed(7) == 7.5


def test_c_examples():
    assert c_coefficient(0) == 1.0
    assert c_coefficient(2) == pytest.approx(1 / math.sqrt(2), rel=1e-14)
    assert c_coefficient(4) == pytest.approx(3 / math.sqrt(24), rel=1e-14)


@pytest.mark.parametrize("bad", [1, 3, 101])
def test_c_rejects_odd(bad):
    with pytest.raises(ValueError):
        c_coefficient(bad)


@pytest.mark.parametrize("bad", [-2, 2.5])
def test_rejects_invalid_levels(bad):
    with pytest.raises(ValueError):
        psi_at_origin(bad)


def test_modulus_equals_c_times_prefactor():
    n = np.arange(0, 10001, 2)
    assert np.allclose(np.abs(psi_at_origin(n)), c_coefficient(n) * ORIGIN_PREFACTOR, rtol=1e-12, atol=0)


def test_squares_strictly_decreasing():
    sq = psi_at_origin(np.arange(0, 10001, 2)) ** 2
    assert np.all(np.diff(sq) < 0)


def test_log_space_matches_factorials():
    for n in range(0, 61, 2):
        assert psi_at_origin(n) == pytest.approx(psi0_direct(n), rel=1e-12)


@given(st.integers(min_value=0, max_value=3000))
def test_central_ratio_exact(j):
    assert central_ratio(j) == pytest.approx(float(central_ratio_exact(j)), rel=1e-13)


def test_log_ratio_branches_join():
    # both sides of the switch to the asymptotic series
    for j in (22, 23, 24, 25, 40):
        assert log_central_ratio(j) == pytest.approx(math.log(central_ratio_exact(j)), rel=1e-14, abs=1e-15)


def test_large_levels_finite():
    v = psi_at_origin(np.array([2 * 10**6, 2 * 10**7]))
    assert np.all(np.isfinite(v)) and np.all(v != 0)


def test_psi0_squared_even_matches():
    assert np.allclose(psi0_squared_even(50), psi_at_origin(2 * np.arange(50)) ** 2, rtol=1e-14)


def test_trap_basis_sectors():
    b = TrapBasis()
    assert list(b.levels(3)) == [0, 2, 4]
    assert list(TrapBasis(parity_sector=Parity.odd).levels(2)) == [1, 3]
    assert list(TrapBasis(parity_sector=Parity.both).energies(3)) == [0.5, 1.5, 2.5]
    assert np.all(TrapBasis(parity_sector=Parity.odd).origin_values(5) == 0)
