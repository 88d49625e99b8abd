"""Qubit-model gates, the 17-qubit readout circuit and the classifier heads."""

import numpy as np
import pytest

from cvqnn.fock import partial_trace
from cvqnn.qubits import (
    binarize_resize,
    google_circuit,
    google_circuit_full,
    google_circuit_readout,
    google_expectation_closed_form,
    google_readout_closed_form,
    phase_shift_grad,
    qubit_gate,
    qubit_state,
    ry_head,
)


def random_circuit_params(seed, integer_s=True):
    """Random bits, real t, and s drawn on the closed form's validity lattice.

    The readout factorization is exact when every ZZ exponent is an integer
    (each ZZ is then a ±1 diagonal); non-integer exponents entangle readout
    and data, which test_generic_real_s_* below pins down.
    """
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, 16)
    t = rng.uniform(0, 2, 16)
    s = rng.integers(-3, 4, 16).astype(float) if integer_s else rng.uniform(0, 2, 16)
    return bits, t, s


class TestQubitGates:
    def test_h_after_x_gives_minus_superposition(self):
        from cvqnn.fock import apply

        state = apply(qubit_gate("X"), qubit_state([1, 0]))
        state = apply(qubit_gate("H"), state)
        assert np.allclose(state.amplitudes, [1 / np.sqrt(2), -1 / np.sqrt(2)], atol=1e-12)

    def test_xxpow_zero_is_identity(self):
        assert np.allclose(qubit_gate("XXpow", 0.0).matrix, np.eye(4), atol=1e-15)

    def test_xxpow_one_is_antidiagonal(self):
        mat = qubit_gate("XXpow", 1.0).matrix
        anti = np.fliplr(np.diag([1.0, 1.0, 1.0, 1.0]))
        assert np.allclose(mat, -1j * anti, atol=1e-12)

    def test_xxpow_structure(self):
        t = 0.37
        mat = qubit_gate("XXpow", t).matrix
        c, s = np.cos(np.pi * t / 2), np.sin(np.pi * t / 2)
        x = np.array([[0, 1], [1, 0]])
        assert np.allclose(mat, c * np.eye(4) - 1j * s * np.kron(x, x), atol=1e-14)

    def test_zzpow_zero_is_identity(self):
        assert np.allclose(qubit_gate("ZZpow", 0.0).matrix, np.eye(4), atol=1e-15)

    def test_zzpow_diagonal(self):
        s = 0.61
        e = np.exp(1j * np.pi * s)
        assert np.allclose(
            qubit_gate("ZZpow", s).matrix, np.diag([1, e, e, 1]), atol=1e-14
        )

    def test_all_gates_unitary(self):
        gates = [
            qubit_gate("H"),
            qubit_gate("X"),
            qubit_gate("Z"),
            qubit_gate("Ry", 0.9),
            qubit_gate("XXpow", 0.41),
            qubit_gate("ZZpow", 1.7),
        ]
        for g in gates:
            d = g.matrix.shape[0]
            assert np.max(np.abs(g.matrix.conj().T @ g.matrix - np.eye(d))) < 1e-12

    def test_unknown_gate(self):
        with pytest.raises(ValueError):
            qubit_gate("T")

    def test_parameter_arity(self):
        with pytest.raises(ValueError):
            qubit_gate("H", 0.3)
        with pytest.raises(ValueError):
            qubit_gate("Ry")

    def test_qubit_state_validation(self):
        with pytest.raises(ValueError):
            qubit_state([1, 1])
        with pytest.raises(ValueError):
            qubit_state([1, 0, 0])


class TestGoogleCircuit:
    def test_all_s_zero_gives_minus_one(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            bits = rng.integers(0, 2, 16)
            t = rng.uniform(0, 2, 16)
            assert google_circuit(bits, t, np.zeros(16)) == pytest.approx(-1.0, abs=1e-12)

    def test_closed_form_fidelity_on_validity_lattice(self):
        for seed in range(20):
            bits, t, s = random_circuit_params(seed)
            readout = google_circuit_readout(bits, t, s)
            closed = google_readout_closed_form(s)
            assert abs(np.vdot(closed, readout)) >= 1 - 1e-9

    def test_expectation_matches_closed_form_on_lattice(self):
        for seed in range(10):
            bits, t, s = random_circuit_params(seed + 100)
            assert google_circuit(bits, t, s) == pytest.approx(
                google_expectation_closed_form(s), abs=1e-9
            )

    def test_sum_zero_balanced_integers(self):
        rng = np.random.default_rng(8)
        s = rng.integers(-2, 3, 16).astype(float)
        s[15] = -s[:15].sum()
        bits = rng.integers(0, 2, 16)
        t = rng.uniform(0, 2, 16)
        assert google_circuit(bits, t, s) == pytest.approx(-1.0, abs=1e-12)

    def test_pairwise_matches_full_statevector(self):
        # Trace distance between the pairwise readout density matrix and the
        # full 17-qubit partial trace, on the validity lattice.
        for seed in range(20):
            bits, t, s = random_circuit_params(seed + 500)
            readout = google_circuit_readout(bits, t, s)
            rho_pair = np.outer(readout, readout.conj())
            rho_full = partial_trace(google_circuit_full(bits, t, s), 0).matrix
            diff = rho_full - rho_pair
            tdist = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff)))
            assert tdist < 1e-9

    def test_expectation_independent_of_t_and_bits_on_lattice(self):
        rng = np.random.default_rng(77)
        s = rng.integers(-3, 4, 16).astype(float)
        ref = google_circuit(rng.integers(0, 2, 16), rng.uniform(0, 2, 16), s)
        for _ in range(5):
            z = google_circuit(rng.integers(0, 2, 16), rng.uniform(0, 2, 16), s)
            assert z == pytest.approx(ref, abs=1e-9)

    def test_generic_real_s_entangles_and_is_detected(self):
        # Outside the integer-s lattice the ZZ layer genuinely entangles
        # readout and data; the pairwise route must refuse rather than
        # silently reproduce the separable closed form.
        bits, t, s = random_circuit_params(1234, integer_s=False)
        with pytest.raises(ArithmeticError):
            google_circuit_readout(bits, t, s)

    def test_generic_real_s_departs_from_closed_form(self):
        # The exact expectation is -Re prod_k g_k with
        # g_k = e^{-i pi s_k}|psi_k(0)|^2 + e^{+i pi s_k}|psi_k(1)|^2;
        # the separable closed form is wrong off the lattice.
        bits, t, s = random_circuit_params(99, integer_s=False)
        z = google_circuit(bits, t, s)
        w0 = np.where(bits == 0, np.cos(np.pi * t / 2) ** 2, np.sin(np.pi * t / 2) ** 2)
        g = np.exp(-1j * np.pi * s) * w0 + np.exp(1j * np.pi * s) * (1 - w0)
        assert z == pytest.approx(-np.prod(g).real, abs=1e-9)
        assert abs(z - google_expectation_closed_form(s)) > 1e-3

    def test_expectation_periodic_in_s(self):
        bits, t, s = random_circuit_params(4, integer_s=False)
        shifted = s.copy()
        shifted[0] += 2.0
        assert google_circuit(bits, t, shifted) == pytest.approx(
            google_circuit(bits, t, s), abs=1e-9
        )

    def test_expectation_in_unit_interval(self):
        for seed in range(5):
            bits, t, s = random_circuit_params(seed, integer_s=False)
            z = google_circuit(bits, t, s)
            assert -1.0 - 1e-12 <= z <= 1.0 + 1e-12

    def test_length_validation(self):
        with pytest.raises(ValueError):
            google_circuit(np.zeros(15, dtype=int), np.zeros(16), np.zeros(16))
        with pytest.raises(ValueError):
            google_circuit(np.zeros(16, dtype=int), np.zeros(16), np.zeros(17))

    def test_bit_validation(self):
        bad = np.zeros(16, dtype=int)
        bad[3] = 2
        with pytest.raises(ValueError):
            google_circuit(bad, np.zeros(16), np.zeros(16))


class TestBinarizeResize:
    def test_all_zero(self):
        assert np.array_equal(binarize_resize(np.zeros((28, 28))), np.zeros(16, dtype=int))

    def test_all_bright(self):
        assert np.array_equal(
            binarize_resize(np.full((28, 28), 255.0)), np.ones(16, dtype=int)
        )

    def test_checkerboard_blocks(self):
        # 7x7 blocks alternating 0/255: block means alternate 0 and 1, and the
        # threshold keeps exactly the bright blocks.
        img = np.zeros((28, 28))
        expected = np.zeros((4, 4), dtype=int)
        for bi in range(4):
            for bj in range(4):
                if (bi + bj) % 2 == 0:
                    img[bi * 7 : (bi + 1) * 7, bj * 7 : (bj + 1) * 7] = 255.0
                    expected[bi, bj] = 1
        assert np.array_equal(binarize_resize(img), expected.reshape(16))

    def test_threshold_strictly_above_half(self):
        # Block mean exactly 0.5 stays 0; just above goes to 1.
        img = np.full((28, 28), 127.5)
        assert np.array_equal(binarize_resize(img), np.zeros(16, dtype=int))
        img2 = np.full((28, 28), 128.0)
        assert np.array_equal(binarize_resize(img2), np.ones(16, dtype=int))

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            binarize_resize(np.zeros((27, 28)))

    def test_range_validation(self):
        with pytest.raises(ValueError):
            binarize_resize(np.full((28, 28), 256.0))


class TestRyHead:
    def test_theta_zero_balanced(self):
        assert ry_head(0.0) == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_quarter_turns(self):
        assert ry_head(np.pi / 2) == pytest.approx([0.0, 1.0], abs=1e-12)
        assert ry_head(-np.pi / 2) == pytest.approx([1.0, 0.0], abs=1e-12)

    def test_closed_form(self):
        for theta in np.linspace(-3, 3, 13):
            c, s = np.cos(theta / 2), np.sin(theta / 2)
            expected = [(c - s) ** 2 / 2, (c + s) ** 2 / 2]
            assert ry_head(theta) == pytest.approx(expected, abs=1e-12)

    def test_probabilities_sum_to_one(self):
        for theta in np.linspace(0, 12, 25):
            assert np.sum(ry_head(theta)) == pytest.approx(1.0, abs=1e-12)

    def test_four_pi_periodicity(self):
        for theta in (0.3, 1.7, -2.2):
            assert ry_head(theta + 4 * np.pi) == pytest.approx(ry_head(theta), abs=1e-9)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            ry_head(np.inf)


class TestPhaseShiftGrad:
    def test_default_statistic_slope_at_zero(self):
        # p1(theta) = (1 + sin theta)/2, so the slope at 0 is 1/2.
        out = phase_shift_grad(0.0, 1e-4)
        assert out.scaled == pytest.approx(0.5, abs=1e-6)
        assert out.raw == pytest.approx(out.scaled * 2e-4, abs=1e-18)

    def test_constant_statistic(self):
        out = phase_shift_grad(0.7, 1e-3, statistic=lambda th: 4.2)
        assert out.raw == 0.0
        assert out.scaled == 0.0

    def test_antisymmetric_statistic_central_difference_order(self):
        # statistic = sin: central difference error is O(delta^2).
        delta = 1e-3
        out = phase_shift_grad(0.0, delta, statistic=np.sin)
        assert out.scaled == pytest.approx(1.0, abs=delta**2)

    def test_delta_validation(self):
        with pytest.raises(ValueError):
            phase_shift_grad(0.0, 0.0)
