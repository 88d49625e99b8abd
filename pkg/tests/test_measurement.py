"""Readout: expectations through reduced density matrices, variances, probabilities."""

import numpy as np
import pytest

from cvqnn.fock import MultiModeState, fock_basis_state, number_op, tensor_states
from cvqnn.measurement import (
    MeasurementOutcome,
    Observable,
    expectation,
    expectation_all_modes,
    measure,
    pauli_x,
    pauli_z,
    probabilities,
    variance,
)


def random_state(modes, cutoff, rng):
    amps = rng.normal(size=cutoff**modes) + 1j * rng.normal(size=cutoff**modes)
    amps /= np.linalg.norm(amps)
    return MultiModeState(amps, modes, cutoff)


class TestObservable:
    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError):
            Observable(np.array([[0, 1], [0, 0]], dtype=complex), 2)

    def test_pauli_restricted_to_cutoff_two(self):
        with pytest.raises(ValueError):
            pauli_x(3)
        with pytest.raises(ValueError):
            pauli_z(4)

    def test_pauli_matrices(self):
        assert np.array_equal(pauli_x().matrix, np.array([[0, 1], [1, 0]]))
        assert np.array_equal(pauli_z().matrix, np.array([[1, 0], [0, -1]]))


class TestExpectation:
    def test_pauli_z_on_vacuum(self):
        assert expectation(fock_basis_state([0], 2), pauli_z()) == pytest.approx(1.0)

    def test_pauli_z_on_one_photon(self):
        assert expectation(fock_basis_state([1], 2), pauli_z()) == pytest.approx(-1.0)

    def test_pauli_x_closed_form_single_mode(self):
        # <X> = 2(Re psi0 Re psi1 + Im psi0 Im psi1) for a cutoff-2 mode.
        rng = np.random.default_rng(31)
        for _ in range(20):
            s = random_state(1, 2, rng)
            p0, p1 = s.amplitudes
            closed = 2 * (p0.real * p1.real + p0.imag * p1.imag)
            assert expectation(s, pauli_x()) == pytest.approx(closed, abs=1e-12)

    def test_pauli_x_on_bell_like_state(self):
        # (|00> + |11>)/sqrt(2): the reduced state is I/2, so tr(rho X) = 0.
        amps = np.zeros(4, dtype=complex)
        amps[0] = amps[3] = 1 / np.sqrt(2)
        s = MultiModeState(amps, 2, 2)
        assert expectation(s, pauli_x(), mode=0) == pytest.approx(0.0, abs=1e-12)

    def test_number_expectation_on_basis_state(self):
        n = 5
        for k in range(n):
            obs = Observable(number_op(n).matrix, n)
            val = expectation(fock_basis_state([k], n), obs)
            assert val == pytest.approx(k, abs=1e-12)

    def test_mode_selects_correct_slot(self):
        obs = Observable(number_op(3).matrix, 3)
        s = fock_basis_state([2, 1], 3)
        assert expectation(s, obs, mode=0) == pytest.approx(2.0, abs=1e-12)
        assert expectation(s, obs, mode=1) == pytest.approx(1.0, abs=1e-12)

    def test_eigenvalue_range_invariant(self):
        rng = np.random.default_rng(5)
        for _ in range(15):
            n = int(rng.integers(2, 6))
            h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            h = (h + h.conj().T) / 2
            obs = Observable(h, n)
            evals = np.linalg.eigvalsh(h)
            s = random_state(2, n, rng)
            val = expectation(s, obs, mode=int(rng.integers(0, 2)))
            assert evals.min() - 1e-10 <= val <= evals.max() + 1e-10

    def test_cutoff_mismatch(self):
        with pytest.raises(ValueError):
            expectation(fock_basis_state([0], 3), pauli_z())


class TestVariance:
    def test_number_variance_on_fock_state_is_zero(self):
        obs = Observable(number_op(4).matrix, 4)
        assert variance(fock_basis_state([2], 4), obs) == pytest.approx(0.0, abs=1e-12)

    def test_pauli_x_variance_on_vacuum(self):
        # <X^2> = 1 and <X> = 0 on |0>.
        assert variance(fock_basis_state([0], 2), pauli_x()) == pytest.approx(1.0)

    def test_variance_nonnegative_random(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            n = int(rng.integers(2, 5))
            h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            h = (h + h.conj().T) / 2
            s = random_state(2, n, rng)
            assert variance(s, Observable(h, n), mode=0) >= -1e-10


class TestProbabilities:
    def test_basis_state(self):
        p = probabilities(fock_basis_state([1, 0], 2))
        assert np.array_equal(p, [0, 0, 1, 0])

    def test_length_and_sum(self):
        rng = np.random.default_rng(13)
        s = random_state(2, 4, rng)
        p = probabilities(s)
        assert p.shape == (16,)
        assert np.sum(p) == pytest.approx(1.0, abs=1e-9)
        assert np.all(p >= 0)

    def test_matches_amplitude_moduli(self):
        amps = np.array([0.6, 0.8j], dtype=complex)
        p = probabilities(MultiModeState(amps, 1, 2))
        assert np.allclose(p, [0.36, 0.64], atol=1e-15)


class TestExpectationAllModes:
    def test_length_matches_modes(self):
        rng = np.random.default_rng(1)
        s = random_state(3, 2, rng)
        assert expectation_all_modes(s, pauli_x()).shape == (3,)

    def test_product_state_factorizes(self):
        rng = np.random.default_rng(41)
        a = random_state(1, 2, rng)
        b = random_state(1, 2, rng)
        ab = tensor_states(a, b)
        vals = expectation_all_modes(ab, pauli_x())
        assert vals[0] == pytest.approx(expectation(a, pauli_x()), abs=1e-12)
        assert vals[1] == pytest.approx(expectation(b, pauli_x()), abs=1e-12)

    def test_mode_swap_permutes_entries(self):
        rng = np.random.default_rng(55)
        n, m = 2, 3
        s = random_state(m, n, rng)
        swapped = MultiModeState(
            np.swapaxes(s.tensor(), 0, 2).reshape(-1), m, n
        )
        vals = expectation_all_modes(s, pauli_x())
        vals_swapped = expectation_all_modes(swapped, pauli_x())
        assert vals_swapped == pytest.approx([vals[2], vals[1], vals[0]], abs=1e-12)


class TestMeasure:
    def test_probability_outcome(self):
        out = measure(fock_basis_state([0, 1], 2), "probability")
        assert out.kind == "probability"
        assert np.sum(out.values) == pytest.approx(1.0, abs=1e-12)

    def test_expectation_outcome(self):
        out = measure(fock_basis_state([0, 1], 2), "expectation", pauli_z())
        assert out.values == pytest.approx([1.0, -1.0], abs=1e-12)

    def test_expectation_without_observable(self):
        with pytest.raises(ValueError):
            measure(fock_basis_state([0], 2), "expectation")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            measure(fock_basis_state([0], 2), "homodyne")

    def test_outcome_validates_probability_sum(self):
        with pytest.raises(ValueError):
            MeasurementOutcome("probability", np.array([0.5, 0.1]))
        with pytest.raises(ValueError):
            MeasurementOutcome("probability", np.array([1.2, -0.2]))
