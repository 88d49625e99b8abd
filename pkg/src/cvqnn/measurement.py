"""Expectation values, variances and Fock-basis probabilities.

Single-mode expectations are taken through the reduced density matrix,
⟨A⟩ = tr(ρ_mode A), so they are well defined on entangled registers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import MultiModeState, check_cutoff, partial_trace

__all__ = [
    "Observable",
    "MeasurementOutcome",
    "pauli_x",
    "pauli_z",
    "expectation",
    "variance",
    "probabilities",
    "expectation_all_modes",
    "measure",
]

_HERMITICITY_TOL = 1e-10


@dataclass(frozen=True)
class Observable:
    """Hermitian single-mode operator at a given cutoff."""

    matrix: np.ndarray
    cutoff: int

    def __post_init__(self):
        check_cutoff(self.cutoff)
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (self.cutoff, self.cutoff):
            raise ValueError(
                f"observable must be {self.cutoff}x{self.cutoff}, got {mat.shape}"
            )
        if np.max(np.abs(mat - mat.conj().T)) > _HERMITICITY_TOL:
            raise ValueError("observable matrix is not Hermitian")
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True)
class MeasurementOutcome:
    """Result of reading a register out.

    kind 'probability': values are Fock-basis probabilities over the full
    register (length cutoff**modes, non-negative, summing to 1 within 1e−9).
    kind 'expectation': values are one real expectation per mode.
    """

    kind: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in ("probability", "expectation"):
            raise ValueError(f"unknown outcome kind {self.kind!r}")
        vals = np.asarray(self.values, dtype=float)
        if self.kind == "probability":
            if np.min(vals) < -1e-12:
                raise ValueError("negative probability entry")
            if abs(float(np.sum(vals)) - 1.0) > 1e-9:
                raise ValueError("probabilities do not sum to 1")
        object.__setattr__(self, "values", vals)


def pauli_x(cutoff: int = 2) -> Observable:
    """Pauli X on the two-level truncation; defined only at cutoff 2."""
    if cutoff != 2:
        raise ValueError("Pauli observables are defined only at cutoff 2")
    return Observable(np.array([[0, 1], [1, 0]], dtype=complex), 2)


def pauli_z(cutoff: int = 2) -> Observable:
    """Pauli Z on the two-level truncation; defined only at cutoff 2."""
    if cutoff != 2:
        raise ValueError("Pauli observables are defined only at cutoff 2")
    return Observable(np.array([[1, 0], [0, -1]], dtype=complex), 2)


def _reduced(state: MultiModeState, obs: Observable, mode: int) -> np.ndarray:
    if obs.cutoff != state.cutoff:
        raise ValueError(f"cutoff mismatch: {obs.cutoff} vs {state.cutoff}")
    return partial_trace(state, mode).matrix


def expectation(state: MultiModeState, obs: Observable, mode: int = 0) -> float:
    """⟨A⟩ on one mode of a normalized state: tr(ρ_mode A).

    For a single-mode cutoff-2 state (ψ₀, ψ₁) and A = X this reduces to
    2(Re ψ₀ Re ψ₁ + Im ψ₀ Im ψ₁).
    """
    rho = _reduced(state, obs, mode)
    value = np.trace(rho @ obs.matrix)
    return float(value.real)


def variance(state: MultiModeState, obs: Observable, mode: int = 0) -> float:
    """⟨A²⟩ − ⟨A⟩² on one mode; non-negative up to a 1e−10 rounding floor."""
    rho = _reduced(state, obs, mode)
    mean = np.trace(rho @ obs.matrix).real
    second = np.trace(rho @ obs.matrix @ obs.matrix).real
    return float(second - mean * mean)


def probabilities(state: MultiModeState) -> np.ndarray:
    """Fock-basis probabilities |c_k|² of a normalized register state."""
    return np.abs(state.amplitudes) ** 2


def expectation_all_modes(state: MultiModeState, obs: Observable) -> np.ndarray:
    """Vector of single-mode expectations, one entry per mode."""
    return np.array([expectation(state, obs, mode) for mode in range(state.modes)])


def measure(
    state: MultiModeState, kind: str, obs: Observable | None = None
) -> MeasurementOutcome:
    """Read a register out as probabilities or per-mode expectations."""
    if kind == "probability":
        return MeasurementOutcome("probability", probabilities(state))
    if kind == "expectation":
        if obs is None:
            raise ValueError("expectation readout needs an observable")
        return MeasurementOutcome("expectation", expectation_all_modes(state, obs))
    raise ValueError(f"unknown readout kind {kind!r}")
