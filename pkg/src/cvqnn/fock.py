"""Truncated Fock-space states and operators.

A register of ``modes`` qumodes at photon-number cutoff ``cutoff`` lives in a
dense complex vector of length ``cutoff**modes``.  Basis kets are ordered with
mode 0 most significant: |k₀k₁…k_{m−1}⟩ sits at flat index Σⱼ kⱼ·n^{m−1−j},
which is exactly the ordering produced by chained Kronecker products.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

__all__ = [
    "MultiModeState",
    "FockOperator",
    "SingleModeDensity",
    "fock_basis_state",
    "creation_op",
    "annihilation_op",
    "number_op",
    "tensor_states",
    "kron_ops",
    "embed_single_mode",
    "embed_two_mode",
    "apply",
    "inner_product",
    "partial_trace",
]


def check_cutoff(cutoff: int) -> int:
    """Validate a photon-number cutoff (an int ≥ 2) and return it."""
    if not isinstance(cutoff, (int, np.integer)) or isinstance(cutoff, bool):
        raise ValueError(f"cutoff must be an integer, got {cutoff!r}")
    if cutoff < 2:
        raise ValueError(f"cutoff must be at least 2, got {cutoff}")
    return int(cutoff)


@dataclass(frozen=True)
class MultiModeState:
    """State vector of an m-mode register at a common cutoff.

    Attributes:
        amplitudes: complex vector of length cutoff**modes.
        modes: number of qumodes (≥ 1).
        cutoff: photon-number cutoff n (≥ 2); kept photon numbers are 0..n−1.
    """

    amplitudes: np.ndarray
    modes: int
    cutoff: int

    def __post_init__(self):
        check_cutoff(self.cutoff)
        if self.modes < 1:
            raise ValueError(f"modes must be at least 1, got {self.modes}")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.shape[0] != self.cutoff**self.modes:
            raise ValueError(
                f"amplitude vector must have length {self.cutoff**self.modes} "
                f"for {self.modes} mode(s) at cutoff {self.cutoff}, "
                f"got shape {amps.shape}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "MultiModeState":
        """Return the unit-norm rescaling of this state.

        Raises ValueError on the zero vector.
        """
        nrm = self.norm
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return MultiModeState(self.amplitudes / nrm, self.modes, self.cutoff)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis of length cutoff per mode."""
        return self.amplitudes.reshape((self.cutoff,) * self.modes)


@dataclass(frozen=True)
class FockOperator:
    """Dense operator on an ``arity``-mode register at a common cutoff."""

    matrix: np.ndarray
    arity: int
    cutoff: int

    def __post_init__(self):
        check_cutoff(self.cutoff)
        if self.arity < 1:
            raise ValueError(f"arity must be at least 1, got {self.arity}")
        mat = np.asarray(self.matrix, dtype=complex)
        d = self.cutoff**self.arity
        if mat.shape != (d, d):
            raise ValueError(
                f"operator matrix must be {d}x{d} for arity {self.arity} "
                f"at cutoff {self.cutoff}, got shape {mat.shape}"
            )
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "FockOperator":
        return FockOperator(self.matrix.conj().T, self.arity, self.cutoff)


@dataclass(frozen=True)
class SingleModeDensity:
    """Reduced density matrix of one mode (n×n, Hermitian, unit trace)."""

    matrix: np.ndarray
    cutoff: int

    def __post_init__(self):
        check_cutoff(self.cutoff)
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (self.cutoff, self.cutoff):
            raise ValueError(
                f"density matrix must be {self.cutoff}x{self.cutoff}, "
                f"got shape {mat.shape}"
            )
        object.__setattr__(self, "matrix", mat)


def fock_basis_state(photon_numbers, cutoff: int) -> MultiModeState:
    """Basis ket |k₀k₁…⟩ as a MultiModeState.

    Args:
        photon_numbers: iterable of per-mode photon numbers, each in 0..cutoff−1.
        cutoff: photon-number cutoff.
    """
    check_cutoff(cutoff)
    ks = [int(k) for k in np.atleast_1d(photon_numbers)]
    if len(ks) < 1:
        raise ValueError("need at least one mode")
    for k in ks:
        if not 0 <= k < cutoff:
            raise ValueError(
                f"photon number {k} outside 0..{cutoff - 1} at cutoff {cutoff}"
            )
    m = len(ks)
    index = 0
    for k in ks:
        index = index * cutoff + k
    amps = np.zeros(cutoff**m, dtype=complex)
    amps[index] = 1.0
    return MultiModeState(amps, m, cutoff)


def creation_op(cutoff: int) -> FockOperator:
    """Single-mode creation operator â†: â†|k⟩ = √(k+1)|k+1⟩, â†|n−1⟩ = 0.

    The matrix carries √1..√(n−1) on the first subdiagonal; the top rung is
    annihilated by the cutoff.
    """
    n = check_cutoff(cutoff)
    mat = np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=-1).astype(complex)
    return FockOperator(mat, 1, n)


def annihilation_op(cutoff: int) -> FockOperator:
    """Single-mode annihilation operator â: â|0⟩ = 0, â|k⟩ = √k|k−1⟩."""
    n = check_cutoff(cutoff)
    mat = np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)
    return FockOperator(mat, 1, n)


def number_op(cutoff: int) -> FockOperator:
    """Number operator n̂ = â†â.

    Computed as the literal matrix product so the identity with
    creation_op·annihilation_op holds bit-for-bit; the diagonal is
    (0, 1, …, n−1) to machine precision.
    """
    n = check_cutoff(cutoff)
    return FockOperator(creation_op(n).matrix @ annihilation_op(n).matrix, 1, n)


def tensor_states(a: MultiModeState, b: MultiModeState) -> MultiModeState:
    """Kronecker product of two registers; a's modes come first."""
    if a.cutoff != b.cutoff:
        raise ValueError(f"cutoff mismatch: {a.cutoff} vs {b.cutoff}")
    return MultiModeState(
        np.kron(a.amplitudes, b.amplitudes), a.modes + b.modes, a.cutoff
    )


def kron_ops(a: FockOperator, b: FockOperator) -> FockOperator:
    """Kronecker product of two operators; a acts on the leading modes."""
    if a.cutoff != b.cutoff:
        raise ValueError(f"cutoff mismatch: {a.cutoff} vs {b.cutoff}")
    return FockOperator(np.kron(a.matrix, b.matrix), a.arity + b.arity, a.cutoff)


def _identity(cutoff: int, arity: int) -> FockOperator:
    return FockOperator(np.eye(cutoff**arity, dtype=complex), arity, cutoff)


def embed_single_mode(op: FockOperator, mode: int, modes: int) -> FockOperator:
    """Embed a one-mode operator into an m-mode register: I⊗…⊗op⊗…⊗I."""
    if op.arity != 1:
        raise ValueError(f"expected a single-mode operator, got arity {op.arity}")
    if not 0 <= mode < modes:
        raise ValueError(f"mode {mode} out of range for {modes} mode(s)")
    parts = []
    if mode > 0:
        parts.append(_identity(op.cutoff, mode))
    parts.append(op)
    if modes - mode - 1 > 0:
        parts.append(_identity(op.cutoff, modes - mode - 1))
    return reduce(kron_ops, parts)


def embed_two_mode(op: FockOperator, mode: int, modes: int) -> FockOperator:
    """Embed a two-mode operator onto the adjacent pair (mode, mode+1)."""
    if op.arity != 2:
        raise ValueError(f"expected a two-mode operator, got arity {op.arity}")
    if not 0 <= mode <= modes - 2:
        raise ValueError(
            f"adjacent pair ({mode}, {mode + 1}) out of range for {modes} mode(s)"
        )
    parts = []
    if mode > 0:
        parts.append(_identity(op.cutoff, mode))
    parts.append(op)
    if modes - mode - 2 > 0:
        parts.append(_identity(op.cutoff, modes - mode - 2))
    return reduce(kron_ops, parts)


def apply(op: FockOperator, state: MultiModeState, mode: int | None = None) -> MultiModeState:
    """Apply an operator to a state; no renormalization is performed.

    With ``mode=None`` the operator must cover the full register.  A one- or
    two-mode operator may instead be targeted at ``mode`` (for two-mode
    operators: the adjacent pair (mode, mode+1)); the result equals applying
    the identity-padded embedding, computed by contracting the targeted axes.
    """
    if op.cutoff != state.cutoff:
        raise ValueError(f"cutoff mismatch: {op.cutoff} vs {state.cutoff}")
    if mode is None:
        if op.arity != state.modes:
            raise ValueError(
                f"operator arity {op.arity} does not match register of "
                f"{state.modes} mode(s); pass a target mode"
            )
        return MultiModeState(op.matrix @ state.amplitudes, state.modes, state.cutoff)
    if op.arity not in (1, 2):
        raise ValueError("mode targeting is for one- or two-mode operators")
    n, m = state.cutoff, state.modes
    if op.arity == 1:
        if not 0 <= mode < m:
            raise ValueError(f"mode {mode} out of range for {m} mode(s)")
        t = np.moveaxis(state.tensor(), mode, 0)
        t = np.tensordot(op.matrix, t, axes=([1], [0]))
        t = np.moveaxis(t, 0, mode)
    else:
        if not 0 <= mode <= m - 2:
            raise ValueError(
                f"adjacent pair ({mode}, {mode + 1}) out of range for {m} mode(s)"
            )
        t = state.tensor().reshape(n**mode, n * n, n ** (m - mode - 2))
        t = np.einsum("ab,ibj->iaj", op.matrix, t)
    return MultiModeState(t.reshape(n**m), m, n)


def inner_product(a: MultiModeState, b: MultiModeState) -> complex:
    """⟨a|b⟩, conjugate-linear in the first argument."""
    if a.cutoff != b.cutoff or a.modes != b.modes:
        raise ValueError("states live on different registers")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def partial_trace(state: MultiModeState, keep_mode: int) -> SingleModeDensity:
    """Reduced density matrix of one mode, tracing out all others.

    ρ[i, j] = Σ_rest c[…i…] c̄[…j…] with i, j in the kept slot.
    """
    if not 0 <= keep_mode < state.modes:
        raise ValueError(f"mode {keep_mode} out of range for {state.modes} mode(s)")
    t = np.moveaxis(state.tensor(), keep_mode, 0).reshape(state.cutoff, -1)
    rho = t @ t.conj().T
    return SingleModeDensity(rho, state.cutoff)
