"""Qubit-model statevector simulator for the two binary-classifier circuits.

A qubit register is a cutoff-2 Fock register, so states and single/two-mode
application reuse the fock machinery.  The 17-qubit readout circuit is
simulated two ways: pairwise (readout ⊗ one data qubit at a time), which
exploits the circuit's separable structure and *verifies* separability at
every step, and as a full 17-qubit statevector for cross-checking.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .fock import MultiModeState, apply, partial_trace, tensor_states
from .fock import FockOperator

__all__ = [
    "qubit_state",
    "qubit_gate",
    "google_circuit",
    "google_circuit_readout",
    "google_circuit_full",
    "google_readout_closed_form",
    "google_expectation_closed_form",
    "binarize_resize",
    "ry_head",
    "phase_shift_grad",
    "PhaseShiftGrad",
]

_SQRT2 = np.sqrt(2.0)

_FIXED_GATES = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / _SQRT2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def qubit_state(amplitudes) -> MultiModeState:
    """Validated q-qubit state: length 2^q, normalized within 1e−9."""
    amps = np.asarray(amplitudes, dtype=complex)
    q = int(np.log2(amps.size))
    if 2**q != amps.size or q < 1:
        raise ValueError(f"amplitude length {amps.size} is not a power of two")
    if abs(np.linalg.norm(amps) - 1.0) > 1e-9:
        raise ValueError("qubit state is not normalized")
    return MultiModeState(amps, q, 2)


def qubit_gate(name: str, param: float | None = None) -> FockOperator:
    """Gate matrix by name: H, X, Z (fixed); Ry, XXpow, ZZpow (parametrized).

    XXpow(t) is cos(πt/2) on the diagonal with −i·sin(πt/2) on the
    antidiagonal; ZZpow(s) is diag(1, e^{iπs}, e^{iπs}, 1).
    """
    if name in _FIXED_GATES:
        if param is not None:
            raise ValueError(f"gate {name} takes no parameter")
        return FockOperator(_FIXED_GATES[name].copy(), 1, 2)
    if param is None:
        raise ValueError(f"gate {name} needs a parameter")
    val = float(param)
    if name == "Ry":
        c, s = np.cos(val / 2), np.sin(val / 2)
        return FockOperator(np.array([[c, -s], [s, c]], dtype=complex), 1, 2)
    if name == "XXpow":
        c = np.cos(np.pi * val / 2)
        s = -1j * np.sin(np.pi * val / 2)
        mat = np.array(
            [[c, 0, 0, s], [0, c, s, 0], [0, s, c, 0], [s, 0, 0, c]], dtype=complex
        )
        return FockOperator(mat, 2, 2)
    if name == "ZZpow":
        phase = np.exp(1j * np.pi * val)
        return FockOperator(np.diag([1, phase, phase, 1]).astype(complex), 2, 2)
    raise ValueError(f"unknown gate {name!r}")


def _check_circuit_args(pixel_bits, t, s):
    bits = np.asarray(pixel_bits, dtype=int).reshape(-1)
    t = np.asarray(t, dtype=float).reshape(-1)
    s = np.asarray(s, dtype=float).reshape(-1)
    if bits.size != 16 or t.size != 16 or s.size != 16:
        raise ValueError(
            f"expected 16 pixel bits and 16 parameters of each kind, got "
            f"{bits.size}/{t.size}/{s.size}"
        )
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("pixel bits must be 0 or 1")
    return bits, t, s


def _pure_factor(rho: np.ndarray) -> np.ndarray:
    """Principal eigenvector of a reduced density matrix that must be pure.

    The circuit's derivation keeps readout and data separable; this check is
    where that claim is enforced rather than assumed.
    """
    evals, evecs = np.linalg.eigh(rho)
    if evals[0] > 1e-9:
        raise ArithmeticError(
            f"reduced state is not pure (second Schmidt weight {evals[0]:.3e})"
        )
    return evecs[:, -1]


def google_circuit_readout(pixel_bits, t, s) -> np.ndarray:
    """Readout qubit state after the full circuit, simulated pairwise.

    Data qubit k is prepared by X^{bit_k}|0⟩; the readout by H∘X|0⟩; a layer
    of XXpow(t_k) gates on each (readout, k) pair is followed by a layer of
    ZZpow(s_k) gates, then H on the readout.  Each pair interaction is
    simulated on a two-qubit register and the factors are recovered by
    partial trace, with separability verified at every step: raises
    ArithmeticError when a ZZ gate with a non-integer exponent entangles
    the readout with a data qubit that carries weight on both basis states
    (generic real parameters do exactly that).
    """
    bits, t, s = _check_circuit_args(pixel_bits, t, s)
    x, h = qubit_gate("X"), qubit_gate("H")
    readout = apply(h, apply(x, qubit_state([1, 0])))
    data = []
    for bit in bits:
        d = qubit_state([1, 0])
        data.append(apply(x, d) if bit else d)
    for k in range(16):
        pair = apply(qubit_gate("XXpow", t[k]), tensor_states(readout, data[k]))
        readout = MultiModeState(_pure_factor(partial_trace(pair, 0).matrix), 1, 2)
        data[k] = MultiModeState(_pure_factor(partial_trace(pair, 1).matrix), 1, 2)
    for k in range(16):
        pair = apply(qubit_gate("ZZpow", s[k]), tensor_states(readout, data[k]))
        readout = MultiModeState(_pure_factor(partial_trace(pair, 0).matrix), 1, 2)
        data[k] = MultiModeState(_pure_factor(partial_trace(pair, 1).matrix), 1, 2)
    return apply(h, readout).amplitudes


def _apply_pair(state: MultiModeState, gate: FockOperator, q0: int, q1: int) -> MultiModeState:
    """Two-qubit gate on an arbitrary (q0, q1) pair of a register."""
    m = state.modes
    tens = np.moveaxis(state.tensor(), (q0, q1), (0, 1)).reshape(4, -1)
    tens = (gate.matrix @ tens).reshape((2, 2) + (2,) * (m - 2))
    tens = np.moveaxis(tens, (0, 1), (q0, q1))
    return MultiModeState(tens.reshape(-1), m, 2)


def google_circuit_full(pixel_bits, t, s) -> MultiModeState:
    """The same circuit as a single 17-qubit statevector (readout = qubit 0)."""
    bits, t, s = _check_circuit_args(pixel_bits, t, s)
    state = MultiModeState(
        np.eye(1, 2**17, 0, dtype=complex).reshape(-1), 17, 2
    )
    x, h = qubit_gate("X"), qubit_gate("H")
    state = apply(h, apply(x, state, mode=0), mode=0)
    for k in range(16):
        if bits[k]:
            state = apply(x, state, mode=k + 1)
    for k in range(16):
        state = _apply_pair(state, qubit_gate("XXpow", t[k]), 0, k + 1)
    for k in range(16):
        state = _apply_pair(state, qubit_gate("ZZpow", s[k]), 0, k + 1)
    return apply(h, state, mode=0)


def google_circuit(pixel_bits, t, s) -> float:
    """⟨Z⟩ of the readout qubit, via the partial trace of the register.

    Uses the fast pairwise route where the circuit's separable structure
    holds (exactly the case when every ZZ exponent is an integer, or every
    XX exponent is even); when the pairwise route detects entanglement it
    falls back to the exact 17-qubit statevector, so the returned value is
    always the true expectation.
    """
    try:
        amps = google_circuit_readout(pixel_bits, t, s)
        rho = np.outer(amps, amps.conj())
    except ArithmeticError:
        rho = partial_trace(google_circuit_full(pixel_bits, t, s), 0).matrix
    return float(rho[0, 0].real - rho[1, 1].real)


def google_readout_closed_form(s) -> np.ndarray:
    """Normalized readout state (1 − e^{iπΣs}, 1 + e^{iπΣs})/‖·‖."""
    s = np.asarray(s, dtype=float).reshape(-1)
    e = np.exp(1j * np.pi * np.sum(s))
    vec = np.array([1 - e, 1 + e], dtype=complex)
    return vec / np.linalg.norm(vec)


def google_expectation_closed_form(s) -> float:
    """⟨Z⟩ from the closed-form readout state."""
    s = np.asarray(s, dtype=float).reshape(-1)
    e = np.exp(1j * np.pi * np.sum(s))
    lo, hi = abs(1 - e) ** 2, abs(1 + e) ** 2
    return float((lo - hi) / (lo + hi))


def binarize_resize(image) -> np.ndarray:
    """28×28 grayscale in [0, 255] → 16 bits (4×4 blocks, row-major).

    Normalizes by 255, area-averages each 7×7 block, thresholds at 0.5.
    """
    img = np.asarray(image, dtype=float)
    if img.shape != (28, 28):
        raise ValueError(f"expected a 28x28 image, got shape {img.shape}")
    if img.min() < 0 or img.max() > 255:
        raise ValueError("pixel values must lie in [0, 255]")
    blocks = (img / 255.0).reshape(4, 7, 4, 7).mean(axis=(1, 3))
    return (blocks > 0.5).astype(int).reshape(16)


def ry_head(theta: float) -> np.ndarray:
    """Measurement probabilities of Ry(θ)∘H|0⟩.

    Equals ((cos(θ/2)−sin(θ/2))²/2, (cos(θ/2)+sin(θ/2))²/2).
    """
    theta = float(theta)
    if not np.isfinite(theta):
        raise ValueError("theta must be finite")
    state = apply(qubit_gate("Ry", theta), apply(qubit_gate("H"), qubit_state([1, 0])))
    return np.abs(state.amplitudes) ** 2


class PhaseShiftGrad(NamedTuple):
    """Two-evaluation parameter-shift readout: raw difference and its 1/(2δ) scaling."""

    raw: float
    scaled: float


def phase_shift_grad(
    theta: float, delta: float, statistic: Callable[[float], float] | None = None
) -> PhaseShiftGrad:
    """Central two-evaluation rule: statistic(θ+δ) − statistic(θ−δ).

    The default statistic is the |1⟩ probability of the Ry head.  Returns the
    raw difference together with the 1/(2δ)-scaled slope estimate.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if statistic is None:
        statistic = lambda th: float(ry_head(th)[1])
    raw = float(statistic(theta + delta)) - float(statistic(theta - delta))
    return PhaseShiftGrad(raw, raw / (2 * delta))
