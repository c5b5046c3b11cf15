import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from udisc import qmat
from udisc.errors import DimensionCap, NonUnitary
from udisc.fixtures import U1, V1

from conftest import random_unitaries

H, V = qmat.KET_H, qmat.KET_V
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


def _same_ray(a, b, tol=1e-12):
    return abs(abs(np.vdot(a, b)) - 1) < tol


def test_eigenphases_diagonal_keeps_order():
    eig = qmat.eigenphases_2x2(U1)
    assert eig.phases[0] == pytest.approx(2 * np.pi / 3, abs=1e-12)
    assert eig.phases[1] == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(eig.vectors[0], H, atol=1e-12)
    np.testing.assert_allclose(eig.vectors[1], V, atol=1e-12)


def test_eigenphases_identity_is_degenerate():
    eig = qmat.eigenphases_2x2(np.eye(2))
    assert eig.phases == (0.0, 0.0)
    np.testing.assert_array_equal(eig.vectors[0], H)
    np.testing.assert_array_equal(eig.vectors[1], V)


def test_eigenphases_pauli_x():
    eig = qmat.eigenphases_2x2(PAULI_X)
    assert eig.phases[0] == pytest.approx(0.0, abs=1e-12)
    assert eig.phases[1] == pytest.approx(np.pi, abs=1e-12)
    np.testing.assert_allclose(eig.vectors[0], np.array([1, 1]) / np.sqrt(2), atol=1e-12)
    np.testing.assert_allclose(eig.vectors[1], np.array([1, -1]) / np.sqrt(2), atol=1e-12)


def test_eigenphases_rejects_non_unitary():
    with pytest.raises(NonUnitary):
        qmat.eigenphases_2x2(np.diag([1.0, 2.0]))


def test_eigen_reconstruction_random(rng):
    for u in random_unitaries(rng, 1000):
        eig = qmat.eigenphases_2x2(u)
        np.testing.assert_allclose(eig.reconstruct(), u, atol=1e-9)
        assert abs(np.vdot(*eig.vectors)) < 1e-9
        for th, v in zip(eig.phases, eig.vectors):
            assert 0 <= th < 2 * np.pi
            np.testing.assert_allclose(u @ v, np.exp(1j * th) * v, atol=1e-9)


def test_eigen_nearly_degenerate_falls_back_to_canonical_basis():
    u = np.exp(0.3j) * np.diag([1.0, np.exp(1e-11j)])
    eig = qmat.eigenphases_2x2(u)
    assert eig.phases[0] == eig.phases[1]
    np.testing.assert_array_equal(eig.vectors[0], H)


@pytest.mark.parametrize("m, expected", [
    (np.eye(2), True),
    (U1, True),
    (np.diag([1.0, 2.0]), False),
    (np.array([[1, 1], [0, 1]]), False),
])
def test_unitary_check(m, expected):
    assert qmat.unitary_check(m, 1e-10) is expected


def test_phase_invariant_distance_examples():
    assert qmat.phase_invariant_distance(U1, U1) == pytest.approx(0.0, abs=1e-15)
    assert qmat.phase_invariant_distance(np.eye(2), np.diag([-1, 1])) == pytest.approx(1.0)
    # Tr(U1^dagger V1) = e^{-i pi/2} + 1, modulus sqrt(2)
    assert qmat.phase_invariant_distance(U1, V1) == pytest.approx(1 - np.sqrt(2) / 2, abs=1e-12)


def test_phase_invariant_distance_requires_unitary():
    with pytest.raises(NonUnitary):
        qmat.phase_invariant_distance(np.eye(2), np.diag([1.0, 2.0]))


def test_phase_invariant_distance_global_phase(rng):
    for a in random_unitaries(rng, 100):
        phi = rng.uniform(0, 2 * np.pi)
        assert qmat.phase_invariant_distance(a, np.exp(1j * phi) * a) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi), st.floats(0, np.pi), st.floats(0, 2 * np.pi))
def test_distance_symmetric_and_bounded(a, b, g, phi):
    rz = lambda t: np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
    ry = np.array([[np.cos(g / 2), -np.sin(g / 2)], [np.sin(g / 2), np.cos(g / 2)]])
    u = rz(a) @ ry @ rz(b)
    w = np.exp(1j * phi) * rz(b) @ ry
    d = qmat.phase_invariant_distance(u, w)
    assert 0 <= d <= 1
    assert d == pytest.approx(qmat.phase_invariant_distance(w, u), abs=1e-12)


def test_tensor_power_examples():
    np.testing.assert_array_equal(qmat.tensor_power(np.eye(2), 3), np.eye(8))
    th = 0.7
    d = np.diag([np.exp(1j * th), 1])
    np.testing.assert_allclose(qmat.tensor_power(d, 2),
                               np.diag([np.exp(2j * th), np.exp(1j * th), np.exp(1j * th), 1]), atol=1e-15)


def test_tensor_power_on_bell_state():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    out = qmat.tensor_power(U1, 2) @ bell
    expected = np.array([np.exp(4j * np.pi / 3), 0, 0, 1]) / np.sqrt(2)
    np.testing.assert_allclose(out, expected, atol=1e-15)


def test_tensor_power_matches_repeated_kron(rng):
    u = random_unitaries(rng, 1)[0]
    acc = u
    for n in range(2, 6):
        acc = np.kron(acc, u)
        np.testing.assert_array_equal(qmat.tensor_power(u, n), acc)
        assert qmat.unitary_check(acc, 1e-10)


def test_tensor_power_cap():
    with pytest.raises(DimensionCap):
        qmat.tensor_power(np.eye(2), 13)
    with pytest.raises(DimensionCap):
        qmat.tensor_power(np.eye(2), 4, cap=3)


def test_apply_each_qubit_matches_dense(rng):
    u = random_unitaries(rng, 1)[0]
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    np.testing.assert_allclose(qmat.apply_each_qubit(u, psi), qmat.tensor_power(u, 4) @ psi, atol=1e-12)


def test_matrix_json_encoding():
    m = np.array([[0.5 + 0.866j, 0], [0, 1]])
    enc = qmat.mat_to_json(m)
    assert enc == [[[0.5, 0.866], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]
    np.testing.assert_array_equal(qmat.mat_from_json(enc), m)
    v = np.array([0.6, 0.8j])
    np.testing.assert_array_equal(qmat.state_from_json(qmat.state_to_json(v)), v)
