import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from randdecouple.errors import UnsupportedConfigurationError
from randdecouple.groups import DecouplingGroup, pauli_group, twirl
from randdecouple.operators import IDENTITY_2, SIGMA_X, SIGMA_Z, two_norm
from randdecouple.protocols import (
    ControlPath,
    ProtocolSpec,
    control_unitary_at,
    interval_index,
    leading_average_hamiltonian,
    logical_hamiltonian_at,
    logical_interaction_hamiltonian_at,
    make_path,
    random_indices,
)
from randdecouple.system import Envelope, OpenSystemSpec, build_spin_bath, drift_at, interaction_at

P1 = pauli_group(1)


def test_horizon_snaps_to_interval_grid():
    p = ProtocolSpec("random", P1, 0.1, 0.34)
    assert p.n_intervals == 3 and p.horizon == pytest.approx(0.3)
    assert ProtocolSpec("cyclic", P1, 0.05, 0.2).cycle_time == pytest.approx(0.2)
    with pytest.raises(ValueError):
        ProtocolSpec("random", P1, 0.1, 0.01)
    with pytest.raises(ValueError):
        ProtocolSpec("sometimes", P1, 0.1, 1.0)
    with pytest.raises(ValueError):
        ProtocolSpec("random", P1, -0.1, 1.0)


def test_cyclic_path_single_cycle():
    path = make_path(ProtocolSpec("cyclic", P1, 0.1, 0.4))
    assert path.element_indices.tolist() == [0, 1, 2, 3]
    np.testing.assert_array_equal(path.jump_times, np.arange(4) * 0.1)


def test_cyclic_path_repeats_and_custom_order():
    path = make_path(ProtocolSpec("cyclic", P1, 0.1, 0.8, order=(0, 3, 1, 2)))
    assert path.element_indices.tolist() == [0, 3, 1, 2] * 2
    with pytest.raises(ValueError):
        ProtocolSpec("cyclic", P1, 0.1, 0.8, order=(0, 1, 1, 2))


def test_cyclic_needs_whole_cycles():
    with pytest.raises(ValueError):
        make_path(ProtocolSpec("cyclic", P1, 0.1, 0.6))


def test_free_path():
    path = make_path(ProtocolSpec("free", P1, 0.1, 0.5))
    assert path.element_indices.tolist() == [0] * 5
    for t in np.linspace(0, 0.5, 11):
        np.testing.assert_array_equal(control_unitary_at(path, t), IDENTITY_2)


def test_random_path_frequencies():
    path = make_path(ProtocolSpec("random", P1, 1e-5, 1.0, seed=3))
    assert path.n_intervals == 100_000
    freq = np.bincount(path.element_indices, minlength=4) / path.n_intervals
    assert np.all(np.abs(freq - 0.25) <= 0.01)


def test_random_path_is_pure_function_of_seed():
    p = ProtocolSpec("random", P1, 0.01, 1.0, seed=99)
    a, b = make_path(p, 5), make_path(p, 5)
    assert np.array_equal(a.element_indices, b.element_indices)
    assert not np.array_equal(a.element_indices, make_path(p, 6).element_indices)
    q = ProtocolSpec("random", P1, 0.01, 1.0, seed=100)
    assert not np.array_equal(a.element_indices, make_path(q, 5).element_indices)


def test_random_indices_order_independent():
    block = random_indices(7, range(10), 20, 4)
    reversed_rows = random_indices(7, range(9, -1, -1), 20, 4)[::-1]
    assert np.array_equal(block, reversed_rows)
    assert np.array_equal(block[3], random_indices(7, [3], 20, 4)[0])


def test_control_unitary_right_continuity():
    dt = 0.1
    path = make_path(ProtocolSpec("cyclic", P1, dt, 0.4))
    np.testing.assert_array_equal(control_unitary_at(path, 1.5 * dt), SIGMA_X)
    for j in range(4):
        assert interval_index(path, j * dt) == j
    assert interval_index(path, 0.4) == 3
    with pytest.raises(ValueError):
        control_unitary_at(path, -1e-3)
    with pytest.raises(ValueError):
        control_unitary_at(path, 0.41)


def test_control_path_validation():
    with pytest.raises(ValueError):
        ControlPath([0, 4], 0.1, P1)
    with pytest.raises(ValueError):
        ControlPath([], 0.1, P1)


def test_twirl_is_ensemble_average_of_conjugation():
    x = np.array([[0.4, 0.3 - 1.1j], [-0.2j, -0.9]])
    n, j = 100_000, 3
    idx = random_indices(2024, range(n), j + 1, 4)[:, j]
    s = P1.stack[idx]
    vals = np.einsum("nba,bc,ncd->nad", s.conj(), x, s)
    mean = vals.mean(axis=0)
    tx = twirl(P1, x)
    for part in (np.real, np.imag):
        se = np.sqrt(part(vals).var(axis=0, ddof=1) / n)
        assert np.all(np.abs(part(mean) - part(tx)) <= 5 * se + 1e-12)


# frame Hamiltonians --------------------------------------------------------

@pytest.fixture(scope="module")
def td_spec():
    return build_spin_bath(
        4, 2, [0.3, 0.2, 0.5], [1.0, 0.4], omega0=0.8,
        envelopes=[Envelope("sinusoid", amplitude=1.0, frequency=2.0), Envelope(), Envelope("constant", amplitude=0.5)],
    )


def test_free_path_logical_equals_drift(noisy_spec, td_spec):
    path = make_path(ProtocolSpec("free", P1, 0.1, 1.0))
    for spec in (noisy_spec, td_spec):
        for t in (0.0, 0.33, 1.0):
            np.testing.assert_allclose(logical_hamiltonian_at(spec, path, t), drift_at(spec, t), atol=1e-15)


def test_sigma_x_flips_dephasing_coupling(dephasing_spec):
    path = ControlPath([1], 1.0, P1)
    h = logical_hamiltonian_at(dephasing_spec, path, 0.5)
    (_, _, b), = dephasing_spec.couplings
    h_s = dephasing_spec.system_hamiltonian_at(0.5)
    expected = -np.kron(h_s, np.eye(4)) + np.kron(np.eye(2), dephasing_spec.env_hamiltonian) - np.kron(SIGMA_Z, b)
    np.testing.assert_allclose(h, expected, atol=1e-15)


def test_logical_hamiltonian_trace_and_norm_invariants(td_spec, rng):
    path = make_path(ProtocolSpec("random", P1, 0.1, 2.0, seed=5))
    for t in rng.uniform(0, 2.0, 10):
        hl = logical_hamiltonian_at(td_spec, path, t)
        assert abs(np.trace(hl) - np.trace(drift_at(td_spec, t))) <= 1e-12
        hi = logical_interaction_hamiltonian_at(td_spec, path, t)
        assert abs(two_norm(hi) - two_norm(interaction_at(td_spec, t))) <= 1e-10


def test_logical_interaction_without_env_hamiltonian(rng):
    b = rng.standard_normal((2, 2))
    spec = OpenSystemSpec(2, 2, system_terms=((SIGMA_X, Envelope()),), couplings=((SIGMA_Z, Envelope(), b + b.T),))
    path = make_path(ProtocolSpec("random", P1, 0.1, 1.0, seed=1))
    for t in (0.05, 0.55):
        np.testing.assert_allclose(
            logical_interaction_hamiltonian_at(spec, path, t), logical_hamiltonian_at(spec, path, t), atol=1e-15
        )


def test_logical_interaction_free_single_coupling(dephasing_spec):
    (_, _, b), = dephasing_spec.couplings
    spec = OpenSystemSpec(2, 4, env_hamiltonian=dephasing_spec.env_hamiltonian, couplings=((SIGMA_Z, Envelope(), b),))
    path = make_path(ProtocolSpec("free", P1, 0.1, 1.0))
    h_e = dephasing_spec.env_hamiltonian
    for t in (0.0, 0.37, 0.9):
        rotated = expm(1j * h_e * t) @ b @ expm(-1j * h_e * t)
        np.testing.assert_allclose(
            logical_interaction_hamiltonian_at(spec, path, t), np.kron(SIGMA_Z, rotated), atol=1e-13
        )


def test_dimension_mismatch_rejected(noisy_spec):
    path = make_path(ProtocolSpec("free", pauli_group(2), 0.1, 1.0))
    with pytest.raises(ValueError):
        logical_hamiltonian_at(noisy_spec, path, 0.0)
    with pytest.raises(ValueError):
        logical_interaction_hamiltonian_at(noisy_spec, path, 0.0)


# leading average -----------------------------------------------------------

def test_cyclic_average_on_dephasing_is_env_only(dephasing_spec):
    path = make_path(ProtocolSpec("cyclic", P1, 0.1, 0.4))
    avg = leading_average_hamiltonian(dephasing_spec, path)
    np.testing.assert_allclose(avg, np.kron(np.eye(2), dephasing_spec.env_hamiltonian), atol=1e-15)


def test_free_average_is_drift(noisy_spec):
    path = make_path(ProtocolSpec("free", P1, 0.1, 0.4))
    np.testing.assert_allclose(leading_average_hamiltonian(noisy_spec, path), drift_at(noisy_spec, 0.0), atol=1e-15)


def test_cyclic_average_equals_twirl_construction():
    g = DecouplingGroup((IDENTITY_2, SIGMA_Z))
    spec = build_spin_bath(8, 1, [0.4, 0.3, 0.6], [0.9], omega0=0.7)
    path = make_path(ProtocolSpec("cyclic", g, 0.1, 0.4))
    expected = np.kron(twirl(g, spec.system_hamiltonian_at(0)), np.eye(2))
    expected += np.kron(np.eye(2), spec.env_hamiltonian)
    for j_op, b_op in spec.coupling_operators_at(0):
        expected += np.kron(twirl(g, j_op), b_op)
    np.testing.assert_allclose(leading_average_hamiltonian(spec, path), expected, atol=1e-15)


def test_leading_average_rejects_time_dependence(td_spec):
    path = make_path(ProtocolSpec("cyclic", P1, 0.1, 0.4))
    with pytest.raises(UnsupportedConfigurationError):
        leading_average_hamiltonian(td_spec, path)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 1000), st.floats(0, 2), st.lists(st.floats(0, 1), min_size=3, max_size=3))
def test_cyclic_pauli_average_decouples(seed, omega0, norms):
    spec = build_spin_bath(seed, 2, norms, [1.0, 0.5], omega0=omega0)
    path = make_path(ProtocolSpec("cyclic", P1, 0.05, 0.4))
    avg = leading_average_hamiltonian(spec, path)
    assert np.max(np.abs(avg - np.kron(np.eye(2), spec.env_hamiltonian))) <= 1e-10
