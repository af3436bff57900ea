import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from randdecouple.groups import (
    DecouplingGroup,
    group_from_config,
    is_irreducible,
    pauli_group,
    twirl,
    verify_group,
)
from randdecouple.operators import IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z, hermitian_propagator, pauli_string

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
matrix2 = arrays(np.float64, (2, 2, 2), elements=finite).map(lambda a: a[0] + 1j * a[1])
matrix4 = arrays(np.float64, (2, 4, 4), elements=finite).map(lambda a: a[0] + 1j * a[1])


def test_pauli_1_elements_and_order():
    g = pauli_group(1)
    assert len(g) == 4 and g.dim == 2
    for got, want in zip(g.elements, (IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z)):
        np.testing.assert_array_equal(got, want)


def test_pauli_n_sizes_and_lexicographic_order():
    assert len(pauli_group(2)) == 16
    assert len(pauli_group(3)) == 64
    g2 = pauli_group(2)
    np.testing.assert_array_equal(g2.elements[0], np.eye(4))
    np.testing.assert_array_equal(g2.elements[1], pauli_string("IX"))
    np.testing.assert_array_equal(g2.elements[4], pauli_string("XI"))
    with pytest.raises(ValueError):
        pauli_group(4)


def test_first_element_must_be_identity():
    with pytest.raises(ValueError):
        DecouplingGroup((SIGMA_X, IDENTITY_2))
    with pytest.raises(ValueError):
        DecouplingGroup((IDENTITY_2, np.array([[1, 1], [0, 1]])))


def test_closure_of_builtin_groups():
    for n in (1, 2):
        rep = verify_group(pauli_group(n))
        assert rep.closed and rep.worst_residual <= 1e-12


def test_z2_subgroup_is_closed():
    rep = verify_group(DecouplingGroup((IDENTITY_2, SIGMA_X)))
    assert rep.closed and rep.worst_residual <= 1e-12


def test_rotation_set_is_not_closed():
    r = hermitian_propagator(SIGMA_Z, 0.3)
    rep = verify_group(DecouplingGroup((IDENTITY_2, r)))
    # independent check: r @ r = exp(-0.6 i sigma_z) matches neither element up to phase
    rr = r @ r
    assert all(abs(abs(np.trace(g.conj().T @ rr)) - 2) > 1e-3 for g in (IDENTITY_2, r))
    assert not rep.closed and rep.worst_residual > 1e-3


def test_twirl_examples(rng):
    g = pauli_group(1)
    for s in (SIGMA_X, SIGMA_Y, SIGMA_Z):
        assert np.max(np.abs(twirl(g, s))) <= 1e-15
    np.testing.assert_allclose(twirl(g, IDENTITY_2), IDENTITY_2)
    z2 = DecouplingGroup((IDENTITY_2, SIGMA_Z))
    np.testing.assert_allclose(twirl(z2, IDENTITY_2), IDENTITY_2)
    x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    np.testing.assert_allclose(twirl(g, x), np.trace(x) / 2 * IDENTITY_2, atol=1e-14)


def test_twirl_dimension_mismatch():
    with pytest.raises(ValueError):
        twirl(pauli_group(1), np.eye(3))


@settings(max_examples=50, deadline=None)
@given(matrix4)
def test_twirl_idempotent_adjoint_and_schur(x):
    g = pauli_group(2)
    tx = twirl(g, x)
    assert np.max(np.abs(twirl(g, tx) - tx)) <= 1e-10
    assert np.max(np.abs(tx.conj().T - twirl(g, x.conj().T))) <= 1e-12
    traceless = x - np.trace(x) / 4 * np.eye(4)
    assert np.max(np.abs(twirl(g, traceless))) <= 1e-9


@settings(max_examples=50, deadline=None)
@given(matrix2, matrix2, st.floats(-3, 3))
def test_twirl_linear_for_reducible_group(a, b, s):
    g = DecouplingGroup((IDENTITY_2, SIGMA_Z))
    lhs = twirl(g, a + s * b)
    rhs = twirl(g, a) + s * twirl(g, b)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1, np.max(np.abs(rhs)))
    tx = twirl(g, a)
    assert np.max(np.abs(twirl(g, tx) - tx)) <= 1e-10


def test_twirl_matches_empirical_uniform_average(rng):
    g = pauli_group(1)
    x = np.array([[0.3, 1.0 - 0.5j], [0.2 + 0.1j, -0.7]])
    draws = rng.integers(0, 4, size=100_000)
    conj = np.einsum("nba,bc,ncd->nad", g.stack[draws].conj(), x, g.stack[draws])
    mean = conj.mean(axis=0)
    se = np.sqrt(conj.real.var(axis=0, ddof=1) / draws.size) + 1j * np.sqrt(conj.imag.var(axis=0, ddof=1) / draws.size)
    tx = twirl(g, x)
    floor = 1e-12
    assert np.all(np.abs(mean.real - tx.real) <= 5 * se.real + floor)
    assert np.all(np.abs(mean.imag - tx.imag) <= 5 * se.imag + floor)


def test_irreducibility():
    assert is_irreducible(pauli_group(1))
    assert is_irreducible(pauli_group(2))
    z2 = DecouplingGroup((IDENTITY_2, SIGMA_Z))
    assert not is_irreducible(z2)
    np.testing.assert_array_equal(twirl(z2, SIGMA_Z), SIGMA_Z)


def test_group_from_config():
    assert len(group_from_config("pauli_2")) == 16
    lit = [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]], [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]]
    g = group_from_config(lit)
    np.testing.assert_array_equal(g.elements[1], SIGMA_Z)
    g = group_from_config({"elements": lit, "name": "z2"})
    assert g.name == "z2"
    with pytest.raises(ValueError):
        group_from_config("pauli_9")
    with pytest.raises(ValueError):
        group_from_config([[[[1, 0], [0, 0]], [[0, 0]]]])
