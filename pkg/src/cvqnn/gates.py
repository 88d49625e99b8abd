"""Gaussian and Kerr gates on the truncated Fock space.

Every gate is the exponential of its truncated generator.  The generators for
squeezing, displacement and the beamsplitter are anti-Hermitian by
construction, so the resulting matrices are unitary on the truncated space to
machine precision; truncation shows up as amplitude distortion relative to the
untruncated gate, never as norm loss.  Rotation and Kerr are diagonal and are
written down exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .fock import (
    FockOperator,
    annihilation_op,
    check_cutoff,
    creation_op,
    embed_single_mode,
    embed_two_mode,
    kron_ops,
)

__all__ = [
    "MAX_MAGNITUDE",
    "GateParams",
    "InterferometerParams",
    "matrix_exp",
    "rotation",
    "squeezer",
    "displacement",
    "beamsplitter",
    "kerr",
    "interferometer",
    "gate_unitarity_report",
]

# Magnitude cap on squeeze and displacement parameters; beyond it the
# truncated gate at small cutoffs no longer resembles its untruncated
# counterpart, so construction refuses rather than silently distorting.
MAX_MAGNITUDE = 2.0


def _check_magnitude(value: complex, name: str) -> complex:
    value = complex(value)
    if not np.isfinite(value.real) or not np.isfinite(value.imag):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if abs(value) > MAX_MAGNITUDE:
        raise ValueError(
            f"|{name}| = {abs(value):.4g} exceeds the magnitude cap {MAX_MAGNITUDE}"
        )
    return value


@dataclass(frozen=True)
class GateParams:
    """Parameter record for the single- and two-mode gate families.

    Fields:
        z: squeeze parameter, polar form r·e^{iφ} with r = |z| ≤ 2.
        phi: rotation angle in radians.
        alpha: displacement amplitude, |alpha| ≤ 2.
        theta, phi_bs: beamsplitter mixing angle and phase in radians.
        kappa: Kerr strength.
    """

    z: complex = 0j
    phi: float = 0.0
    alpha: complex = 0j
    theta: float = 0.0
    phi_bs: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "z", _check_magnitude(self.z, "z"))
        object.__setattr__(self, "alpha", _check_magnitude(self.alpha, "alpha"))


def matrix_exp(matrix: np.ndarray) -> np.ndarray:
    """Matrix exponential of a square complex matrix.

    Scaling-and-squaring with a Padé core; a truncated power series is not
    accurate enough for the generator norms that arise here.
    """
    mat = np.asarray(matrix, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix has non-finite entries")
    return scipy.linalg.expm(mat)


def rotation(phi: float, cutoff: int) -> FockOperator:
    """Phase-space rotation R(φ) = exp(iφn̂) = diag(e^{ikφ}); exactly unitary."""
    n = check_cutoff(cutoff)
    diag = np.exp(1j * float(phi) * np.arange(n))
    return FockOperator(np.diag(diag), 1, n)


def squeezer(z: complex, cutoff: int) -> FockOperator:
    """Single-mode squeezer S(z) = exp((z̄â² − zâ†²)/2), |z| ≤ 2."""
    n = check_cutoff(cutoff)
    z = _check_magnitude(z, "z")
    a = annihilation_op(n).matrix
    adag = creation_op(n).matrix
    gen = 0.5 * (np.conj(z) * (a @ a) - z * (adag @ adag))
    return FockOperator(matrix_exp(gen), 1, n)


def displacement(alpha: complex, cutoff: int) -> FockOperator:
    """Displacement D(α) = exp(αâ† − ᾱâ), |α| ≤ 2."""
    n = check_cutoff(cutoff)
    alpha = _check_magnitude(alpha, "alpha")
    a = annihilation_op(n).matrix
    adag = creation_op(n).matrix
    gen = alpha * adag - np.conj(alpha) * a
    return FockOperator(matrix_exp(gen), 1, n)


def beamsplitter(theta: float, phi: float, cutoff: int) -> FockOperator:
    """Two-mode beamsplitter B(θ, φ) = exp(θ(e^{iφ}â†b̂ − e^{−iφ}âb̂†)).

    â acts on the first mode of the pair, b̂ on the second.  The generator is
    anti-Hermitian and photon-number conserving, so the matrix is unitary and
    block-diagonal over total photon number even after truncation.
    """
    n = check_cutoff(cutoff)
    a = kron_ops(annihilation_op(n), _eye(n))
    b = kron_ops(_eye(n), annihilation_op(n))
    adag, bdag = a.dagger(), b.dagger()
    gen = float(theta) * (
        np.exp(1j * float(phi)) * (adag.matrix @ b.matrix)
        - np.exp(-1j * float(phi)) * (a.matrix @ bdag.matrix)
    )
    return FockOperator(matrix_exp(gen), 2, n)


def _eye(cutoff: int) -> FockOperator:
    return FockOperator(np.eye(cutoff, dtype=complex), 1, cutoff)


def kerr(kappa: float, cutoff: int) -> FockOperator:
    """Kerr gate K(κ) = exp(iκn̂²) = diag(e^{iκk²}); exactly unitary."""
    n = check_cutoff(cutoff)
    diag = np.exp(1j * float(kappa) * np.arange(n) ** 2)
    return FockOperator(np.diag(diag), 1, n)


@dataclass(frozen=True)
class InterferometerParams:
    """Parameters of an m-mode passive interferometer.

    bs_theta, bs_phi: one angle pair per adjacent-mode beamsplitter
    (m−1 entries each, empty for m=1); rot_phi: one rotation per mode.
    """

    bs_theta: np.ndarray
    bs_phi: np.ndarray
    rot_phi: np.ndarray

    def __post_init__(self):
        bt = np.atleast_1d(np.asarray(self.bs_theta, dtype=float))
        bp = np.atleast_1d(np.asarray(self.bs_phi, dtype=float))
        rp = np.atleast_1d(np.asarray(self.rot_phi, dtype=float))
        if rp.size < 1:
            raise ValueError("need at least one mode")
        if bt.size != rp.size - 1 or bp.size != rp.size - 1:
            raise ValueError(
                f"for {rp.size} mode(s) expected {rp.size - 1} beamsplitter "
                f"angle(s), got {bt.size} theta / {bp.size} phi"
            )
        object.__setattr__(self, "bs_theta", bt)
        object.__setattr__(self, "bs_phi", bp)
        object.__setattr__(self, "rot_phi", rp)

    @property
    def modes(self) -> int:
        return self.rot_phi.size

    @classmethod
    def zeros(cls, modes: int) -> "InterferometerParams":
        return cls(np.zeros(max(modes - 1, 0)), np.zeros(max(modes - 1, 0)), np.zeros(modes))


def interferometer(params: InterferometerParams, cutoff: int) -> FockOperator:
    """Passive m-mode interferometer.

    Beamsplitters act on adjacent pairs (0,1), (1,2), …, (m−2,m−1) in that
    order, followed by one rotation per mode.  For m=1 this degenerates to a
    single rotation.  Unitary; conserves total photon number.
    """
    n = check_cutoff(cutoff)
    m = params.modes
    total = np.eye(n**m, dtype=complex)
    for j in range(m - 1):
        bs = beamsplitter(params.bs_theta[j], params.bs_phi[j], n)
        total = embed_two_mode(bs, j, m).matrix @ total
    for j in range(m):
        total = embed_single_mode(rotation(params.rot_phi[j], n), j, m).matrix @ total
    return FockOperator(total, m, n)


def _unitarity_defect(matrix: np.ndarray) -> float:
    d = matrix.shape[0]
    return float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(d))))


def gate_unitarity_report(cutoff: int, trials: int = 50, seed: int = 0) -> dict:
    """Max deviation of U†U from the identity per gate family.

    Draws ``trials`` random parameter sets per family (magnitudes uniform in
    [0, 1], angles uniform in [0, 2π)) and records the worst max-abs entry of
    U†U − I.  Returns a dict with the per-family maxima and the draw settings.
    """
    n = check_cutoff(cutoff)
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = np.random.default_rng(seed)
    worst = {
        "rotation": 0.0,
        "squeezer": 0.0,
        "displacement": 0.0,
        "beamsplitter": 0.0,
        "kerr": 0.0,
    }
    for _ in range(trials):
        p = GateParams(
            z=rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * np.pi)),
            phi=rng.uniform(0, 2 * np.pi),
            alpha=rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * np.pi)),
            theta=rng.uniform(0, 2 * np.pi),
            phi_bs=rng.uniform(0, 2 * np.pi),
            kappa=rng.uniform(0, 2 * np.pi),
        )
        checks = {
            "rotation": rotation(p.phi, n),
            "squeezer": squeezer(p.z, n),
            "displacement": displacement(p.alpha, n),
            "beamsplitter": beamsplitter(p.theta, p.phi_bs, n),
            "kerr": kerr(p.kappa, n),
        }
        for name, op in checks.items():
            worst[name] = max(worst[name], _unitarity_defect(op.matrix))
    return {
        "cutoff": n,
        "trials": int(trials),
        "seed": int(seed),
        "max_deviation": worst,
    }
