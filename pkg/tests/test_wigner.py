"""Wigner quadrature vs the Laguerre closed form."""

import numpy as np
import pytest

from cvqnn.wigner import (
    HBAR,
    MAX_FOCK_LEVEL,
    PhaseSpaceGrid,
    grid_to_csv,
    hermite_psi,
    wigner_fock_closed,
    wigner_fock_numeric,
    wigner_grid,
)


class TestHermitePsi:
    def test_ground_state_gaussian(self):
        x = np.linspace(-3, 3, 7)
        assert np.allclose(
            hermite_psi(0, x), np.pi**-0.25 * np.exp(-x * x / 2), atol=1e-15
        )

    def test_orthonormality_by_quadrature(self):
        x = np.linspace(-10, 10, 4001)
        dx = x[1] - x[0]
        for j in range(4):
            for k in range(4):
                overlap = np.sum(hermite_psi(j, x) * hermite_psi(k, x)) * dx
                assert overlap == pytest.approx(1.0 if j == k else 0.0, abs=1e-8)

    def test_parity(self):
        x = np.linspace(0.1, 2.5, 5)
        assert np.allclose(hermite_psi(2, -x), hermite_psi(2, x), atol=1e-14)
        assert np.allclose(hermite_psi(3, -x), -hermite_psi(3, x), atol=1e-14)


class TestNumericPointValues:
    def test_vacuum_origin(self):
        assert wigner_fock_numeric(0, 0.0, 0.0) == pytest.approx(1 / np.pi, abs=1e-6)

    def test_one_photon_origin(self):
        assert wigner_fock_numeric(1, 0.0, 0.0) == pytest.approx(-1 / np.pi, abs=1e-6)

    def test_rotational_symmetry(self):
        # Fock states are phase-rotation invariant: W depends on x^2+p^2 only.
        for k in (0, 2, 4):
            a = wigner_fock_numeric(k, 1.0, 0.5)
            b = wigner_fock_numeric(k, np.sqrt(1.25), 0.0)
            c = wigner_fock_numeric(k, 0.0, np.sqrt(1.25))
            assert a == pytest.approx(b, abs=1e-8)
            assert a == pytest.approx(c, abs=1e-8)

    def test_level_guard(self):
        with pytest.raises(ValueError):
            wigner_fock_numeric(MAX_FOCK_LEVEL + 1, 0.0, 0.0)
        with pytest.raises(ValueError):
            wigner_fock_numeric(-1, 0.0, 0.0)

    def test_highest_supported_level_evaluates(self):
        # The tight 1e-6 agreement bound is promised for k <= 5; at the top
        # supported level the fixed quadrature only tracks the closed form
        # coarsely, but must still be finite and in the right ballpark.
        v = wigner_fock_numeric(MAX_FOCK_LEVEL, 0.7, -0.4)
        assert v == pytest.approx(wigner_fock_closed(MAX_FOCK_LEVEL, 0.7, -0.4), abs=1e-2)


class TestClosedForm:
    def test_origin_values(self):
        assert wigner_fock_closed(0, 0.0, 0.0) == pytest.approx(1 / np.pi)
        assert wigner_fock_closed(1, 0.0, 0.0) == pytest.approx(-1 / np.pi)

    def test_gaussian_decay(self):
        assert abs(wigner_fock_closed(2, 8.0, 0.0)) < 1e-20

    def test_normalization_by_grid_quadrature(self):
        x = np.linspace(-6, 6, 201)
        dx = x[1] - x[0]
        for k in range(4):
            vals = wigner_fock_closed(k, x[None, :], x[:, None])
            assert np.sum(vals) * dx * dx == pytest.approx(1.0, abs=1e-4)


class TestAgreement:
    @pytest.mark.parametrize("k", range(6))
    def test_numeric_matches_closed_on_grid(self, k):
        g = wigner_grid(k, 4.0, 101)
        assert g.max_closed_form_deviation <= 1e-6

    def test_marginal_recovers_position_density(self):
        k = 2
        g = wigner_grid(k, 6.0, 201)
        dp = g.ps[1] - g.ps[0]
        marginal = g.values.sum(axis=0) * dp
        target = hermite_psi(k, g.xs) ** 2
        assert np.max(np.abs(marginal - target)) < 1e-4

    def test_normalization_numeric(self):
        for k in (0, 3, 5):
            g = wigner_grid(k, 6.0, 201)
            dx = g.xs[1] - g.xs[0]
            total = g.values.sum() * dx * dx
            assert 0.999 <= total <= 1.001


class TestGrid:
    def test_vacuum_grid_positive(self):
        g = wigner_grid(0, 4.0, 51)
        assert np.all(g.values > 0)

    def test_one_photon_grid_negative_core(self):
        g = wigner_grid(1, 4.0, 51)
        assert g.values.min() < -0.3

    def test_point_symmetry(self):
        g = wigner_grid(3, 3.0, 41)
        assert np.max(np.abs(g.values - g.values[::-1, ::-1])) < 1e-10

    def test_even_points_rejected(self):
        with pytest.raises(ValueError):
            wigner_grid(0, 4.0, 100)

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            wigner_grid(0, 4.0, 1)

    def test_nonpositive_range_rejected(self):
        with pytest.raises(ValueError):
            wigner_grid(0, 0.0, 11)

    def test_grid_vectors_strictly_increasing(self):
        g = wigner_grid(0, 2.0, 21)
        assert np.all(np.diff(g.xs) > 0)
        assert np.all(np.diff(g.ps) > 0)
        with pytest.raises(ValueError):
            PhaseSpaceGrid(g.xs[::-1], g.ps, g.values, 0, 0.0)

    def test_natural_units_constant(self):
        assert HBAR == 1.0


class TestCsv:
    def test_header_and_row_count(self):
        g = wigner_grid(0, 2.0, 5)
        lines = grid_to_csv(g).strip().split("\n")
        assert lines[0] == "x,p,w"
        assert len(lines) == 1 + 25

    def test_row_order_p_slowest(self):
        g = wigner_grid(0, 2.0, 5)
        lines = grid_to_csv(g).strip().split("\n")[1:]
        first_x = [float(line.split(",")[0]) for line in lines[:5]]
        first_p = [float(line.split(",")[1]) for line in lines[:5]]
        assert first_x == pytest.approx(list(g.xs))
        assert first_p == pytest.approx([g.ps[0]] * 5)

    def test_values_round_trip_at_nine_digits(self):
        g = wigner_grid(1, 3.0, 7)
        lines = grid_to_csv(g).strip().split("\n")[1:]
        parsed = np.array([float(line.split(",")[2]) for line in lines]).reshape(7, 7)
        assert np.max(np.abs(parsed - g.values)) < 1e-8
