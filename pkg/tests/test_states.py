import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from deltaquench.states import (
    Flavor,
    InitialState,
    coherent,
    dephase,
    equal_superposition,
    parse_state_spec,
    two_fermion_superposition,
    two_level,
)


def test_equal_examples():
    assert equal_superposition(1).as_dict() == {0: 1 + 0j}
    d = equal_superposition(2).as_dict()
    assert d[0] == pytest.approx(1 / math.sqrt(2))
    assert d[2] == pytest.approx(-1 / math.sqrt(2))


@given(st.integers(min_value=1, max_value=400))
def test_equal_normalised_even(N):
    s = equal_superposition(N)
    assert np.sum(np.abs(s.amplitudes) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert np.all(s.levels % 2 == 0)
    assert s.max_level == 2 * (N - 1)


def test_zero_rejected():
    with pytest.raises(ValueError):
        equal_superposition(0)


def test_dephase_examples():
    d = dephase(equal_superposition(2)).as_dict()
    assert d == {0: pytest.approx(0.5), 2: pytest.approx(0.5)}
    th = 1.2
    d = dephase(two_level(th, 0.4)).as_dict()
    assert d[0] == pytest.approx(math.cos(th / 2) ** 2)
    assert d[2] == pytest.approx(math.sin(th / 2) ** 2)


def test_dephase_coherent_weights():
    xi = 0.9
    s = dephase(coherent(xi, 10))
    raw = np.array([xi ** (2 * n) / math.factorial(n) for n in range(0, 11, 2)])
    assert np.allclose(s.weights, raw / raw.sum(), rtol=1e-12)


def test_dephase_rejects_diagonal():
    with pytest.raises(ValueError):
        dephase(dephase(equal_superposition(3)))


@given(st.floats(0, 2 * math.pi), st.floats(-math.pi, math.pi))
def test_dephase_keeps_populations(theta, phi):
    s = two_level(theta, phi)
    assert np.array_equal(dephase(s).weights, np.abs(s.amplitudes) ** 2 / np.sum(np.abs(s.amplitudes) ** 2))


def test_two_level_examples():
    assert two_level(0.0, 0.3).as_dict()[0] == 1
    s = two_level(math.pi, 0.7)
    assert abs(s.amplitudes[0]) < 1e-15
    assert s.amplitudes[1] == pytest.approx(cmath.exp(0.7j))
    s = two_level(math.pi / 2, 0.0)
    assert np.allclose(s.amplitudes, [1 / math.sqrt(2), 1 / math.sqrt(2)])


def test_coherent_examples():
    assert coherent(0, 5).as_dict()[0] == 1
    s = coherent(1.0, 2)
    assert np.allclose(s.amplitudes, [math.sqrt(2 / 3), -math.sqrt(1 / 3)])
    assert s.meta["norm_before"] == pytest.approx(math.exp(-1) * 1.5)


@given(st.complex_numbers(max_magnitude=6, allow_nan=False, allow_infinity=False), st.integers(1, 80))
def test_coherent_normalised(xi, N):
    s = coherent(xi, N)
    assert np.sum(np.abs(s.amplitudes) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert 0 < s.meta["norm_before"] <= 1 + 1e-12


def test_two_fermion_examples():
    assert two_fermion_superposition(1).as_dict() == {(0, 2): 1}
    d = two_fermion_superposition(2).as_dict()
    assert d[(0, 2)] == pytest.approx(1 / math.sqrt(2))
    assert d[(0, 4)] == pytest.approx(-1 / math.sqrt(2))
    flat = two_fermion_superposition(3, phase=False)
    assert np.allclose(flat.amplitudes, 1 / math.sqrt(3))


@given(st.integers(1, 200))
def test_two_fermion_ordered_and_normalised(N):
    s = two_fermion_superposition(N)
    assert np.all(s.levels[:, 0] < s.levels[:, 1])
    assert np.sum(np.abs(s.amplitudes) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_invariants_enforced():
    with pytest.raises(ValueError):
        InitialState(Flavor.pure_single, [1], amplitudes=[1.0])
    with pytest.raises(ValueError):
        InitialState(Flavor.pure_single, [0, 2], amplitudes=[1.0, 1.0])
    with pytest.raises(ValueError):
        InitialState(Flavor.diagonal_single, [0, 2], weights=[0.5, 0.6])
    with pytest.raises(ValueError):
        InitialState(Flavor.pure_two_fermion, [[2, 0]], amplitudes=[1.0])


def test_states_immutable():
    s = equal_superposition(3)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0
    with pytest.raises(Exception):
        s.label = "x"


@pytest.mark.parametrize(
    "spec, flavor, size",
    [
        ("equal:N=10", Flavor.pure_single, 10),
        ("diag-equal:N=10", Flavor.diagonal_single, 10),
        ("twolevel:theta=1.0,phi=0.5", Flavor.pure_single, 2),
        ("coherent:xi=1.5+0i,N=40", Flavor.pure_single, 21),
        ("fermi2:N=10", Flavor.pure_two_fermion, 10),
        ("diag-fermi2:N=10", Flavor.diagonal_two_fermion, 10),
    ],
)
def test_parse_specs(spec, flavor, size):
    s = parse_state_spec(spec)
    assert s.flavor is flavor
    assert len(s.levels) == size
    assert s.label == spec


@pytest.mark.parametrize("spec", ["nope:N=2", "equal", "equal:N", "coherent:N=3", "equal:N=0"])
def test_parse_rejects(spec):
    with pytest.raises(ValueError):
        parse_state_spec(spec)


def test_parse_coherent_value():
    s = parse_state_spec("coherent:xi=1+0i,N=2")
    assert np.allclose(s.amplitudes, [math.sqrt(2 / 3), -math.sqrt(1 / 3)])
