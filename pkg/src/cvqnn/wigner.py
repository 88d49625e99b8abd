"""Wigner quasiprobability of Fock basis states on an (x, p) grid.

The numeric route integrates (1/2πħ)∫ e^{−ipy/ħ} ψₖ(x+y/2) ψₖ(x−y/2) dy by
trapezoidal quadrature with Hermite functions from a stable three-term
recurrence.  The closed-form route Wₖ = ((−1)^k/π)·e^{−(x²+p²)}·Lₖ(2(x²+p²))
serves as its oracle; a grid records the worst disagreement between the two.

Natural units: ħ below is the single knob that would restore SI behaviour.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import eval_laguerre

__all__ = [
    "HBAR",
    "MAX_FOCK_LEVEL",
    "PhaseSpaceGrid",
    "hermite_psi",
    "wigner_fock_numeric",
    "wigner_fock_closed",
    "wigner_grid",
    "grid_to_csv",
]

HBAR = 1.0

# Quadrature window and resolution for the y integral.
_Y_RANGE = 12.0
_Y_POINTS = 2049

# Hermite recurrence overflow guard.
MAX_FOCK_LEVEL = 20


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Wigner values of one Fock state on a square (x, p) grid.

    values[i, j] = W(xs[j], ps[i]); max_closed_form_deviation records the
    worst |numeric − closed| over the grid.
    """

    xs: np.ndarray
    ps: np.ndarray
    values: np.ndarray
    fock_level: int
    max_closed_form_deviation: float

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ps = np.asarray(self.ps, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ps) <= 0):
            raise ValueError("grid vectors must be strictly increasing")
        if vals.shape != (ps.size, xs.size):
            raise ValueError(
                f"values must be |ps|x|xs| = {(ps.size, xs.size)}, got {vals.shape}"
            )
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ps", ps)
        object.__setattr__(self, "values", vals)


def _check_level(k: int) -> int:
    if k < 0:
        raise ValueError(f"Fock level must be non-negative, got {k}")
    return int(k)


def hermite_psi(k: int, x) -> np.ndarray:
    """Harmonic-oscillator eigenfunction ψₖ(x) (real, unit L² norm).

    Three-term recurrence on the normalized functions:
    ψⱼ = √(2/j)·x·ψⱼ₋₁ − √((j−1)/j)·ψⱼ₋₂, seeded by the Gaussian ψ₀.
    """
    k = _check_level(k)
    x = np.asarray(x, dtype=float)
    psi_prev = np.zeros_like(x)
    psi = np.pi**-0.25 * np.exp(-0.5 * x * x)
    for j in range(1, k + 1):
        psi, psi_prev = (
            np.sqrt(2.0 / j) * x * psi - np.sqrt((j - 1) / j) * psi_prev,
            psi,
        )
    return psi


def _trapezoid_weights() -> tuple[np.ndarray, np.ndarray]:
    ys = np.linspace(-_Y_RANGE, _Y_RANGE, _Y_POINTS)
    w = np.full(_Y_POINTS, ys[1] - ys[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return ys, w


def _numeric_rows(k: int, xs: np.ndarray, ps: np.ndarray) -> np.ndarray:
    """W(x, p) for the full grid xs × ps, rows indexed by p."""
    ys, w = _trapezoid_weights()
    # The Hermite product is independent of p, so build it once per x.
    plus = hermite_psi(k, xs[:, None] + ys[None, :] / 2)
    minus = hermite_psi(k, xs[:, None] - ys[None, :] / 2)
    product = plus * minus
    phases = np.exp(-1j * np.outer(ps, ys) / HBAR) * w[None, :]
    grid = phases @ product.T / (2 * np.pi * HBAR)
    residue = np.max(np.abs(grid.imag))
    if residue > 1e-9:
        raise ArithmeticError(f"imaginary residue {residue:.3e} exceeds 1e-9")
    return grid.real


def wigner_fock_numeric(k: int, x: float, p: float) -> float:
    """Wigner value of |k⟩ at one phase-space point, by quadrature.

    Rejects k > 20: beyond that the oscillatory integrand outruns the fixed
    quadrature window.
    """
    k = _check_level(k)
    if k > MAX_FOCK_LEVEL:
        raise ValueError(f"Fock level {k} exceeds the supported maximum {MAX_FOCK_LEVEL}")
    return float(_numeric_rows(k, np.array([float(x)]), np.array([float(p)]))[0, 0])


def wigner_fock_closed(k: int, x, p):
    """Closed form Wₖ(x,p) = ((−1)^k/π)·e^{−(x²+p²)}·Lₖ(2(x²+p²))."""
    k = _check_level(k)
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    r2 = x * x + p * p
    vals = ((-1.0) ** k / np.pi) * np.exp(-r2) * eval_laguerre(k, 2 * r2)
    if vals.ndim == 0:
        return float(vals)
    return vals


def wigner_grid(k: int, x_range: float, points: int) -> PhaseSpaceGrid:
    """Numeric Wigner values on the symmetric grid [−x_range, x_range]².

    points must be odd (≥ 3) so the origin is a grid node; the worst
    disagreement with the closed form is stored on the result.
    """
    k = _check_level(k)
    if k > MAX_FOCK_LEVEL:
        raise ValueError(f"Fock level {k} exceeds the supported maximum {MAX_FOCK_LEVEL}")
    if points < 3 or points % 2 == 0:
        raise ValueError(f"points must be an odd integer >= 3, got {points}")
    if not x_range > 0:
        raise ValueError(f"x_range must be positive, got {x_range}")
    xs = np.linspace(-float(x_range), float(x_range), int(points))
    ps = xs.copy()
    values = _numeric_rows(k, xs, ps)
    closed = wigner_fock_closed(k, xs[None, :], ps[:, None])
    deviation = float(np.max(np.abs(values - closed)))
    return PhaseSpaceGrid(xs, ps, values, k, deviation)


def grid_to_csv(grid: PhaseSpaceGrid) -> str:
    """Render a grid as CSV with header x,p,w; p varies slowest."""
    lines = ["x,p,w"]
    for i, p in enumerate(grid.ps):
        for j, x in enumerate(grid.xs):
            lines.append(f"{x:.9g},{p:.9g},{grid.values[i, j]:.9g}")
    return "\n".join(lines) + "\n"
