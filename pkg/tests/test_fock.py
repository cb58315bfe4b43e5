import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qssvqe.fock import (
    FockSpace,
    SnapDispCircuit,
    TruncationWarning,
    annihilation_matrix,
    apply_circuit,
    circuit_gradient,
    circuit_jacobian,
    circuit_matrix,
    creation_matrix,
    displacement_fast,
    displacement_gate,
    fock_state,
    momentum_matrix,
    number_matrix,
    photon_distribution,
    position_matrix,
    snap_gate,
)

from conftest import random_state


def random_circuit(rng, depth, L):
    return SnapDispCircuit(rng.uniform(-1, 1, depth), rng.uniform(-np.pi, np.pi, (depth, L)))


def unitarity_residual(U):
    return np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))


class TestSpace:
    def test_cutoff_validation(self):
        with pytest.raises(ValueError):
            FockSpace(1)
        assert FockSpace.for_qubits(3).cutoff == 8
        assert FockSpace(8).num_qubits == 3

    def test_non_power_of_two_has_no_qubit_count(self):
        assert not FockSpace(6).is_qubit_encoding
        with pytest.raises(ValueError):
            FockSpace(6).num_qubits


class TestOperators:
    def test_l2(self):
        np.testing.assert_array_equal(annihilation_matrix(2).matrix, [[0, 1], [0, 0]])

    def test_l4_superdiagonal(self):
        a = annihilation_matrix(4).matrix
        np.testing.assert_allclose(np.diag(a, 1), [1, np.sqrt(2), np.sqrt(3)], rtol=0)
        assert np.count_nonzero(a) == 3

    def test_create_is_adjoint(self):
        a = annihilation_matrix(4)
        c = creation_matrix(4)
        assert c.label == "create"
        np.testing.assert_array_equal(c.matrix, a.matrix.conj().T)
        assert c.matrix[3, 2] == pytest.approx(np.sqrt(3))

    def test_invalid_cutoff(self):
        with pytest.raises(ValueError):
            annihilation_matrix(1)

    @pytest.mark.parametrize("L", [2, 5, 16])
    def test_quadratures_hermitian(self, L):
        for op in (position_matrix(L), momentum_matrix(L)):
            assert np.max(np.abs(op.matrix - op.matrix.conj().T)) < 1e-12

    def test_number_operator(self):
        a = annihilation_matrix(6).matrix
        np.testing.assert_allclose(a.conj().T @ a, number_matrix(6).matrix, atol=1e-15)


class TestDisplacement:
    def test_zero_is_identity(self):
        np.testing.assert_allclose(displacement_gate(0.0, 8), np.eye(8), atol=1e-15)

    def test_coherent_state_poisson(self):
        alpha, L = 0.5, 16
        probs = photon_distribution(displacement_gate(alpha, L)[:, 0])
        poisson = [math.exp(-alpha**2) * alpha ** (2 * n) / math.factorial(n) for n in range(L)]
        np.testing.assert_allclose(probs, poisson, rtol=0, atol=1e-8)

    def test_inverse_pair(self):
        D = displacement_gate(0.3, 8) @ displacement_gate(-0.3, 8)
        np.testing.assert_allclose(D, np.eye(8), atol=1e-9)

    @pytest.mark.parametrize("alpha", [-1.3, 0.01, 0.7])
    def test_unitary(self, alpha):
        assert unitarity_residual(displacement_gate(alpha, 12)) < 1e-10

    def test_fast_path_agrees_with_expm(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            for alpha in (-0.9, 0.2, 1.4):
                for L in (2, 8, 16):
                    np.testing.assert_allclose(
                        displacement_fast(alpha, L), displacement_gate(alpha, L), atol=1e-12
                    )

    def test_truncation_warning(self):
        with pytest.warns(TruncationWarning):
            displacement_gate(1.5, 8)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            displacement_gate(1.0, 8)

    def test_non_finite(self):
        with pytest.raises(ValueError):
            displacement_gate(float("inf"), 4)

    @pytest.mark.parametrize("L", [2, 4, 8, 16, 32])
    def test_collinear_composition_exact_at_any_cutoff(self, L):
        # real amplitudes share one generator, so truncation cannot spoil the group law
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            prod = displacement_gate(0.5, L) @ displacement_gate(0.4, L)
            np.testing.assert_allclose(prod, displacement_gate(0.9, L), atol=1e-12)

    def test_coherent_state_truncation_error_shrinks_with_cutoff(self):
        alpha = 0.9

        def infidelity(L):
            psi = displacement_gate(alpha, L)[:, 0]
            coherent = np.array(
                [math.exp(-alpha**2 / 2) * alpha**n / math.sqrt(math.factorial(n)) for n in range(L)]
            )
            return 1 - abs(np.vdot(coherent, psi)) ** 2

        errs = [infidelity(L) for L in (4, 8, 16)]
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 1e-10


class TestSnap:
    def test_zero_phases_identity(self):
        np.testing.assert_array_equal(snap_gate(np.zeros(4), 4), np.eye(4))

    def test_pauli_z(self):
        np.testing.assert_allclose(snap_gate([0, np.pi], 2), np.diag([1, -1]), atol=1e-15)

    def test_unit_modulus(self, rng):
        S = snap_gate(rng.uniform(-np.pi, np.pi, 8), 8)
        assert abs(abs(np.linalg.det(S)) - 1) < 1e-12
        np.testing.assert_allclose(np.abs(np.diag(S)), 1.0, rtol=1e-15)
        assert unitarity_residual(S) < 1e-10

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            snap_gate(np.zeros(3), 4)

    def test_snap_leaves_distribution_unchanged(self, rng):
        psi = random_state(rng, 8)
        S = snap_gate(rng.uniform(-np.pi, np.pi, 8), 8)
        np.testing.assert_allclose(photon_distribution(S @ psi), photon_distribution(psi), atol=1e-15)


class TestCircuit:
    def test_depth_zero(self, rng):
        c = SnapDispCircuit.identity(8)
        psi = random_state(rng, 8)
        np.testing.assert_array_equal(apply_circuit(c, psi), psi)
        np.testing.assert_array_equal(circuit_matrix(c), np.eye(8))

    def test_identity_layer_on_fock(self):
        c = SnapDispCircuit.identity(8, depth=1)
        np.testing.assert_allclose(apply_circuit(c, fock_state(3, 8)), fock_state(3, 8), atol=1e-15)

    def test_single_layer_without_displacement_is_snap(self, rng):
        th = rng.uniform(-np.pi, np.pi, 6)
        c = SnapDispCircuit([0.0], [th])
        np.testing.assert_allclose(circuit_matrix(c), snap_gate(th, 6), atol=1e-14)

    def test_layer_order_snap_after_displacement(self):
        alpha, th = 0.4, np.array([0.0, 1.0, 2.0, 3.0])
        c = SnapDispCircuit([alpha], [th])
        np.testing.assert_allclose(
            circuit_matrix(c), snap_gate(th, 4) @ displacement_gate(alpha, 4), atol=1e-13
        )

    def test_layers_applied_first_to_last(self, rng):
        c = random_circuit(rng, 2, 4)
        L1 = snap_gate(c.thetas[0], 4) @ displacement_gate(c.alphas[0], 4)
        L2 = snap_gate(c.thetas[1], 4) @ displacement_gate(c.alphas[1], 4)
        np.testing.assert_allclose(circuit_matrix(c), L2 @ L1, atol=1e-13)

    def test_matrix_times_state_equals_apply(self, rng):
        for _ in range(10):
            c = random_circuit(rng, 3, 8)
            psi = random_state(rng, 8)
            np.testing.assert_allclose(apply_circuit(c, psi), circuit_matrix(c) @ psi, atol=1e-12)

    def test_deep_circuit_unitary(self, rng):
        for _ in range(5):
            assert unitarity_residual(circuit_matrix(random_circuit(rng, 16, 16))) < 1e-10

    def test_norm_preserved(self, rng):
        c = random_circuit(rng, 6, 8)
        psi = random_state(rng, 8)
        assert abs(np.linalg.norm(apply_circuit(c, psi)) - 1) < 1e-10 * c.depth

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            apply_circuit(random_circuit(rng, 1, 4), np.ones(8) / np.sqrt(8))

    def test_vector_round_trip(self, rng):
        c = random_circuit(rng, 3, 4)
        assert SnapDispCircuit.from_vector(c.to_vector(), 4) == c
        assert c.num_params == 15

    def test_rejects_complex_alpha(self):
        with pytest.raises(ValueError):
            SnapDispCircuit(np.array([0.1 + 0.2j]), np.zeros((1, 2)))

    def test_parameters_are_immutable(self, rng):
        c = random_circuit(rng, 2, 4)
        with pytest.raises(ValueError):
            c.thetas[0, 0] = 1.0

    def test_gradient_matches_finite_differences(self, rng):
        L, d = 4, 3
        c = random_circuit(rng, d, L)
        V = np.linalg.qr(rng.normal(size=(L, L)) + 1j * rng.normal(size=(L, L)))[0]

        def loss(x):
            return np.sum(np.abs(circuit_matrix(SnapDispCircuit.from_vector(x, L)) - V) ** 2)

        x = c.to_vector()
        g = circuit_gradient(c, circuit_matrix(c) - V)
        h = 1e-6
        fd = np.array([(loss(x + h * e) - loss(x - h * e)) / (2 * h) for e in np.eye(x.size)])
        np.testing.assert_allclose(g, fd, atol=1e-7)

    def test_jacobian_matches_finite_differences(self, rng):
        L, d = 4, 3
        c = random_circuit(rng, d, L)
        U, J = circuit_jacobian(c)
        np.testing.assert_allclose(U, circuit_matrix(c), atol=1e-14)
        x, h = c.to_vector(), 1e-6
        for k in range(x.size):
            e = np.zeros_like(x)
            e[k] = h
            fd = (circuit_matrix(SnapDispCircuit.from_vector(x + e, L))
                  - circuit_matrix(SnapDispCircuit.from_vector(x - e, L))) / (2 * h)
            np.testing.assert_allclose(J[:, :, k], fd, atol=1e-8)

    def test_jacobian_consistent_with_gradient(self, rng):
        c = random_circuit(rng, 2, 8)
        U, J = circuit_jacobian(c)
        gamma = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        via_jac = 2 * np.real(np.einsum("ij,ijk->k", gamma.conj(), J))
        np.testing.assert_allclose(circuit_gradient(c, gamma), via_jac, atol=1e-11)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 5), st.sampled_from([2, 4, 8]), st.integers(0, 2**16))
    def test_unitarity_property(self, depth, L, seed):
        c = random_circuit(np.random.default_rng(seed), depth, L)
        assert unitarity_residual(circuit_matrix(c)) < 1e-10


class TestPhotonDistribution:
    def test_fock_state(self):
        np.testing.assert_array_equal(photon_distribution(fock_state(2, 4)), [0, 0, 1, 0])

    def test_superposition(self):
        psi = (fock_state(0, 4) + fock_state(3, 4)) / np.sqrt(2)
        np.testing.assert_allclose(photon_distribution(psi), [0.5, 0, 0, 0.5], atol=1e-15)

    def test_sampled_close_to_exact(self, rng):
        psi = random_state(rng, 8)
        exact = photon_distribution(psi)
        sampled = photon_distribution(psi, shots=10**6, seed=5)
        assert 0.5 * np.abs(exact - sampled).sum() < 5e-3

    def test_sampled_deterministic(self, rng):
        psi = random_state(rng, 4)
        a = photon_distribution(psi, shots=1000, seed=11)
        b = photon_distribution(psi, shots=1000, seed=11)
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("shots", [0, -3, 2.5])
    def test_bad_shots(self, shots):
        with pytest.raises(ValueError):
            photon_distribution(fock_state(0, 2), shots=shots)
