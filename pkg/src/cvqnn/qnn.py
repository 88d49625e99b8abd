"""Hybrid classical-quantum classifier and its training loop.

A flattened image passes through a dense classical encoder (ELU hidden
layers, linear output of width 8m-2), the output parametrizes a data-encoding
circuit K.D.U.S acting on the m-mode vacuum, the encoded state runs through a
stack of photonic layers K.D.U2.S.U1, and the register is read out either as
Fock-basis probabilities (length n^m) or as per-mode X expectations (cutoff 2
only).  Classical parameters train by analytic reverse-mode gradients chained
through the encoder output; quantum parameters and the encoder output itself
are differentiated by central finite differences, with per-gate prefix states
and suffix operator products cached so each probe costs two matrix-vector
products instead of a full circuit rebuild.
"""

from __future__ import annotations

import json
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataio import Dataset, take_balanced
from .fock import (
    MultiModeState,
    apply,
    check_cutoff,
    embed_single_mode,
    embed_two_mode,
    fock_basis_state,
)
from .gates import beamsplitter, displacement, kerr, rotation, squeezer
from .measurement import measure, pauli_x

__all__ = [
    "SQUASH_SCALE",
    "TrainingDivergence",
    "StateNormWarning",
    "ClassicalLayer",
    "EncodingParams",
    "QnnLayerParams",
    "HybridModelConfig",
    "ModelParams",
    "TrainingHistory",
    "elu",
    "squash",
    "encoding_param_count",
    "layer_param_count",
    "classical_forward",
    "encode",
    "qnn_layer",
    "model_forward",
    "one_hot",
    "pad_onehot",
    "loss_xent",
    "loss_mse",
    "finite_diff_grad",
    "sgd_step",
    "init_params",
    "batch_gradient",
    "evaluate",
    "train",
]

# Learned squeeze and displacement magnitudes pass through squash() before
# gate construction, so their effective range is (-1.5, 1.5) and truncation
# leakage stays bounded at small cutoffs.
SQUASH_SCALE = 1.5

_XENT_EPS = 1e-12


class TrainingDivergence(RuntimeError):
    """Raised when training leaves the numerically meaningful regime."""


class StateNormWarning(UserWarning):
    """Norm drifted outside [1-1e-3, 1+1e-6] after a circuit stage."""


def _check_norm(norm: float) -> None:
    # written so that a nan norm fails the >= test and aborts
    if not norm >= 0.5:
        raise TrainingDivergence(
            f"state norm collapsed to {norm:.3g}; catastrophic truncation leakage"
        )
    if not (1.0 - 1e-3 <= norm <= 1.0 + 1e-6):
        warnings.warn(
            f"state norm {norm:.6g} outside [1-1e-3, 1+1e-6]", StateNormWarning
        )


def elu(x):
    """Exponential linear unit: x for x >= 0, e^x - 1 below."""
    arr = np.asarray(x, dtype=float)
    out = np.where(arr >= 0, arr, np.expm1(np.minimum(arr, 0.0)))
    return float(out) if out.ndim == 0 else out


def _elu_prime(z: np.ndarray) -> np.ndarray:
    return np.where(z >= 0, 1.0, np.exp(np.minimum(z, 0.0)))


def squash(r):
    """Magnitude squashing r -> 1.5 tanh(r) applied to squeeze/displacement."""
    return SQUASH_SCALE * np.tanh(r)


def encoding_param_count(modes: int) -> int:
    """Width of the data-encoding parameter vector: 8m - 2."""
    if modes < 2:
        raise ValueError(f"need at least 2 modes, got {modes}")
    return 8 * modes - 2


def layer_param_count(modes: int) -> int:
    """Parameters consumed by one photonic layer: 9m - 4."""
    if modes < 2:
        raise ValueError(f"need at least 2 modes, got {modes}")
    return 9 * modes - 4


@dataclass(frozen=True)
class ClassicalLayer:
    """Dense layer y = act(Wx + b) with act in {elu, identity}."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str = "elu"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.bias, dtype=float)
        if w.ndim != 2:
            raise ValueError(f"weights must be a matrix, got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise ValueError(
                f"bias length {b.shape} does not match {w.shape[0]} output(s)"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("layer parameters must be finite")
        if self.activation not in ("elu", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)


def classical_forward(layers, image) -> np.ndarray:
    """Compose dense layers over a flattened input vector."""
    x = np.asarray(image, dtype=float).ravel()
    for layer in layers:
        if x.shape[0] != layer.weights.shape[1]:
            raise ValueError(
                f"layer expects {layer.weights.shape[1]} inputs, got {x.shape[0]}"
            )
        z = layer.weights @ x + layer.bias
        x = elu(z) if layer.activation == "elu" else z
    return x


def _classical_cached(layers, image):
    """Forward pass keeping (input, pre-activation) pairs for backprop."""
    x = np.asarray(image, dtype=float).ravel()
    caches = []
    for layer in layers:
        if x.shape[0] != layer.weights.shape[1]:
            raise ValueError(
                f"layer expects {layer.weights.shape[1]} inputs, got {x.shape[0]}"
            )
        z = layer.weights @ x + layer.bias
        caches.append((x, z))
        x = elu(z) if layer.activation == "elu" else z
    return x, caches


def _classical_backward(layers, caches, grad_out):
    """Reverse-mode gradients (dW, db) per layer, forward order."""
    delta = np.asarray(grad_out, dtype=float)
    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        a_prev, z = caches[i]
        if layers[i].activation == "elu":
            delta = delta * _elu_prime(z)
        grads[i] = (np.outer(delta, a_prev), delta)
        delta = layers[i].weights.T @ delta
    return grads


def _split_lengths(vec: np.ndarray, lengths, what: str):
    vec = np.asarray(vec, dtype=float)
    if vec.ndim != 1 or vec.shape[0] != sum(lengths):
        raise ValueError(
            f"{what} vector must have length {sum(lengths)}, got shape {vec.shape}"
        )
    out, cursor = [], 0
    for length in lengths:
        out.append(vec[cursor : cursor + length].copy())
        cursor += length
    return out


@dataclass(frozen=True)
class EncodingParams:
    """Data-encoding circuit parameters for m modes, 8m-2 reals.

    Layout order: squeeze r (m), squeeze phi (m), beamsplitter theta (m-1),
    beamsplitter phi (m-1), rotation phi (m), displacement r (m),
    displacement phi (m), Kerr kappa (m).
    """

    squeeze_r: np.ndarray
    squeeze_phi: np.ndarray
    bs_theta: np.ndarray
    bs_phi: np.ndarray
    rot_phi: np.ndarray
    disp_r: np.ndarray
    disp_phi: np.ndarray
    kerr_kappa: np.ndarray

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.squeeze_r)).size
        if m < 2:
            raise ValueError(f"need at least 2 modes, got {m}")
        sizes = (m, m, m - 1, m - 1, m, m, m, m)
        for name, size in zip(self.__dataclass_fields__, sizes):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if arr.shape != (size,):
                raise ValueError(
                    f"{name} must have {size} entr(ies) for {m} modes, "
                    f"got shape {arr.shape}"
                )
            object.__setattr__(self, name, arr)

    @property
    def modes(self) -> int:
        return self.squeeze_r.size

    @classmethod
    def from_vector(cls, vec) -> "EncodingParams":
        vec = np.asarray(vec, dtype=float)
        if vec.ndim != 1 or (vec.size + 2) % 8 != 0:
            raise ValueError(
                f"encoding vector length must be 8m-2, got shape {vec.shape}"
            )
        m = (vec.size + 2) // 8
        if m < 2:
            raise ValueError(f"encoding vector of length {vec.size} implies m < 2")
        parts = _split_lengths(vec, (m, m, m - 1, m - 1, m, m, m, m), "encoding")
        return cls(*parts)

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [
                self.squeeze_r,
                self.squeeze_phi,
                self.bs_theta,
                self.bs_phi,
                self.rot_phi,
                self.disp_r,
                self.disp_phi,
                self.kerr_kappa,
            ]
        )


@dataclass(frozen=True)
class QnnLayerParams:
    """One photonic layer K.D.U2.S.U1 for m modes, 9m-4 reals.

    Layout order: U1 beamsplitter theta (m-1), U1 beamsplitter phi (m-1),
    U1 rotation (m), squeeze r (m), U2 beamsplitter theta (m-1),
    U2 beamsplitter phi (m-1), U2 rotation (m), displacement r (m),
    Kerr kappa (m).
    """

    bs1_theta: np.ndarray
    bs1_phi: np.ndarray
    rot1_phi: np.ndarray
    squeeze_r: np.ndarray
    bs2_theta: np.ndarray
    bs2_phi: np.ndarray
    rot2_phi: np.ndarray
    disp_r: np.ndarray
    kerr_kappa: np.ndarray

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.rot1_phi)).size
        if m < 2:
            raise ValueError(f"need at least 2 modes, got {m}")
        sizes = (m - 1, m - 1, m, m, m - 1, m - 1, m, m, m)
        for name, size in zip(self.__dataclass_fields__, sizes):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if arr.shape != (size,):
                raise ValueError(
                    f"{name} must have {size} entr(ies) for {m} modes, "
                    f"got shape {arr.shape}"
                )
            object.__setattr__(self, name, arr)

    @property
    def modes(self) -> int:
        return self.rot1_phi.size

    @classmethod
    def from_vector(cls, vec) -> "QnnLayerParams":
        vec = np.asarray(vec, dtype=float)
        if vec.ndim != 1 or (vec.size + 4) % 9 != 0:
            raise ValueError(
                f"layer vector length must be 9m-4, got shape {vec.shape}"
            )
        m = (vec.size + 4) // 9
        if m < 2:
            raise ValueError(f"layer vector of length {vec.size} implies m < 2")
        parts = _split_lengths(
            vec, (m - 1, m - 1, m, m, m - 1, m - 1, m, m, m), "layer"
        )
        return cls(*parts)

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [
                self.bs1_theta,
                self.bs1_phi,
                self.rot1_phi,
                self.squeeze_r,
                self.bs2_theta,
                self.bs2_phi,
                self.rot2_phi,
                self.disp_r,
                self.kerr_kappa,
            ]
        )


# Gate sequences.  Every scalar parameter feeds exactly one gate, which is
# what lets a finite-difference probe rebuild a single small gate and reuse
# cached prefix states and suffix products for everything else.


def _encode_gate_table(m):
    """Ordered (kind, mode) gate list of the encoding circuit: S, U, D, K."""
    table = [("sq", j) for j in range(m)]
    table += [("bs", j) for j in range(m - 1)]
    table += [("rot", j) for j in range(m)]
    table += [("disp", j) for j in range(m)]
    table += [("kerr", j) for j in range(m)]
    return table


def _encode_small_gate(kind, j, p: EncodingParams, n):
    if kind == "sq":
        return squeezer(squash(p.squeeze_r[j]) * np.exp(1j * p.squeeze_phi[j]), n)
    if kind == "bs":
        return beamsplitter(p.bs_theta[j], p.bs_phi[j], n)
    if kind == "rot":
        return rotation(p.rot_phi[j], n)
    if kind == "disp":
        return displacement(squash(p.disp_r[j]) * np.exp(1j * p.disp_phi[j]), n)
    return kerr(p.kerr_kappa[j], n)


def _encode_param_slots(m):
    """Feature index -> (gate slot, kind, mode), following the layout order."""
    table = _encode_gate_table(m)
    slot = {entry: t for t, entry in enumerate(table)}
    plan = []
    for kind, count in (
        ("sq", m),
        ("sq", m),
        ("bs", m - 1),
        ("bs", m - 1),
        ("rot", m),
        ("disp", m),
        ("disp", m),
        ("kerr", m),
    ):
        plan += [(slot[(kind, j)], kind, j) for j in range(count)]
    return plan


def _layer_gate_table(m):
    """Ordered (kind, mode) gate list of one photonic layer."""
    table = [("bs1", j) for j in range(m - 1)]
    table += [("rot1", j) for j in range(m)]
    table += [("sq", j) for j in range(m)]
    table += [("bs2", j) for j in range(m - 1)]
    table += [("rot2", j) for j in range(m)]
    table += [("disp", j) for j in range(m)]
    table += [("kerr", j) for j in range(m)]
    return table


def _layer_small_gate(kind, j, p: QnnLayerParams, n):
    if kind == "bs1":
        return beamsplitter(p.bs1_theta[j], p.bs1_phi[j], n)
    if kind == "rot1":
        return rotation(p.rot1_phi[j], n)
    if kind == "sq":
        return squeezer(squash(p.squeeze_r[j]), n)
    if kind == "bs2":
        return beamsplitter(p.bs2_theta[j], p.bs2_phi[j], n)
    if kind == "rot2":
        return rotation(p.rot2_phi[j], n)
    if kind == "disp":
        return displacement(squash(p.disp_r[j]), n)
    return kerr(p.kerr_kappa[j], n)


def _layer_param_slots(m):
    """Layer-vector index -> (gate slot, kind, mode)."""
    table = _layer_gate_table(m)
    slot = {entry: t for t, entry in enumerate(table)}
    plan = []
    for kind, count in (
        ("bs1", m - 1),
        ("bs1", m - 1),
        ("rot1", m),
        ("sq", m),
        ("bs2", m - 1),
        ("bs2", m - 1),
        ("rot2", m),
        ("disp", m),
        ("kerr", m),
    ):
        plan += [(slot[(kind, j)], kind, j) for j in range(count)]
    return plan


def encode(features, cutoff: int, modes: int | None = None) -> MultiModeState:
    """Data-encoding circuit K.D.U.S applied to the m-mode vacuum.

    features may be an EncodingParams or a raw vector of length 8m-2 (m is
    then inferred).  Squeeze and displacement magnitudes are squashed; all
    other entries are used as angles directly.
    """
    n = check_cutoff(cutoff)
    p = features if isinstance(features, EncodingParams) else EncodingParams.from_vector(features)
    if modes is not None and modes != p.modes:
        raise ValueError(f"features describe {p.modes} modes, expected {modes}")
    m = p.modes
    state = fock_basis_state([0] * m, n)
    for kind, j in _encode_gate_table(m):
        state = apply(_encode_small_gate(kind, j, p, n), state, mode=j)
    return state


def qnn_layer(params, state: MultiModeState) -> MultiModeState:
    """One photonic layer K.D.U2.S.U1, U1 applied first."""
    p = params if isinstance(params, QnnLayerParams) else QnnLayerParams.from_vector(params)
    if p.modes != state.modes:
        raise ValueError(f"layer is for {p.modes} modes, state has {state.modes}")
    n = state.cutoff
    for kind, j in _layer_gate_table(p.modes):
        state = apply(_layer_small_gate(kind, j, p, n), state, mode=j)
    return state


@dataclass(frozen=True)
class HybridModelConfig:
    """Architecture and training hyperparameters of the hybrid classifier.

    encoder_widths lists the dense-layer output widths in order and must end
    at 8m-2; hidden layers use ELU, the final layer is linear.  None selects
    the default single hidden layer of 32.
    """

    modes: int
    cutoff: int
    layers: int
    classes: int
    samples: int
    epochs: int
    measurement: str = "probability"
    loss: str = "categorical_crossentropy"
    encoder_widths: tuple | None = None
    lr: float = 0.05
    seed: int = 42
    batch_size: int = 16
    fd_delta: float = 1e-6

    def __post_init__(self):
        if self.modes < 2:
            raise ValueError(f"need at least 2 modes, got {self.modes}")
        check_cutoff(self.cutoff)
        if self.layers < 0:
            raise ValueError(f"layers must be non-negative, got {self.layers}")
        if not 2 <= self.classes <= 10:
            raise ValueError(f"classes must be in 2..10, got {self.classes}")
        if self.samples < 1:
            raise ValueError(f"samples must be positive, got {self.samples}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be non-negative, got {self.epochs}")
        if self.measurement not in ("probability", "expectation_x"):
            raise ValueError(f"unknown measurement {self.measurement!r}")
        if self.loss not in ("categorical_crossentropy", "mse"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.measurement == "expectation_x":
            if self.cutoff != 2:
                raise ValueError("expectation_x readout requires cutoff 2")
            if self.classes > self.modes:
                raise ValueError(
                    f"expectation_x readout has length {self.modes}, "
                    f"cannot fit {self.classes} classes"
                )
        elif self.cutoff**self.modes < self.classes:
            raise ValueError(
                f"probability readout has length {self.cutoff**self.modes}, "
                f"cannot fit {self.classes} classes"
            )
        widths = self.encoder_widths
        if widths is None:
            widths = (32, encoding_param_count(self.modes))
        widths = tuple(int(w) for w in widths)
        if any(w < 1 for w in widths):
            raise ValueError(f"encoder widths must be positive, got {widths}")
        if widths[-1] != encoding_param_count(self.modes):
            raise ValueError(
                f"encoder must end at width {encoding_param_count(self.modes)} "
                f"for {self.modes} modes, got {widths}"
            )
        if not (np.isfinite(self.lr) and self.lr >= 0):
            raise ValueError(f"lr must be finite and non-negative, got {self.lr}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")
        if not 0 < self.fd_delta < 1:
            raise ValueError(f"fd_delta must be in (0, 1), got {self.fd_delta}")
        object.__setattr__(self, "encoder_widths", widths)

    @property
    def output_size(self) -> int:
        if self.measurement == "expectation_x":
            return self.modes
        return self.cutoff**self.modes

    def as_dict(self) -> dict:
        return {
            "modes": self.modes,
            "cutoff": self.cutoff,
            "layers": self.layers,
            "classes": self.classes,
            "samples": self.samples,
            "epochs": self.epochs,
            "measurement": self.measurement,
            "loss": self.loss,
            "encoder_widths": list(self.encoder_widths),
            "lr": self.lr,
            "seed": self.seed,
            "batch_size": self.batch_size,
            "fd_delta": self.fd_delta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HybridModelConfig":
        d = dict(d)
        d["encoder_widths"] = tuple(d["encoder_widths"])
        return cls(**d)


@dataclass(frozen=True)
class ModelParams:
    """All trainable parameters: dense layers plus per-layer gate vectors."""

    classical: tuple
    quantum: tuple

    def to_vector(self) -> np.ndarray:
        parts = []
        for layer in self.classical:
            parts.append(layer.weights.ravel())
            parts.append(layer.bias)
        for p in self.quantum:
            parts.append(p.to_vector())
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, config: HybridModelConfig, vec) -> "ModelParams":
        vec = np.asarray(vec, dtype=float)
        widths = (784,) + config.encoder_widths
        lengths = []
        for i in range(len(widths) - 1):
            lengths += [widths[i + 1] * widths[i], widths[i + 1]]
        lengths += [layer_param_count(config.modes)] * config.layers
        parts = _split_lengths(vec, lengths, "model parameter")
        classical = []
        for i in range(len(widths) - 1):
            w = parts[2 * i].reshape(widths[i + 1], widths[i])
            b = parts[2 * i + 1]
            act = "elu" if i < len(widths) - 2 else "identity"
            classical.append(ClassicalLayer(w, b, act))
        offset = 2 * (len(widths) - 1)
        quantum = [QnnLayerParams.from_vector(parts[offset + i]) for i in range(config.layers)]
        return cls(tuple(classical), tuple(quantum))


def param_count(config: HybridModelConfig) -> int:
    """Total trainable parameter count of a configuration."""
    widths = (784,) + config.encoder_widths
    total = sum(widths[i + 1] * (widths[i] + 1) for i in range(len(widths) - 1))
    return total + config.layers * layer_param_count(config.modes)


def init_params(config: HybridModelConfig, rng=None) -> ModelParams:
    """Seeded initial parameters.

    Draw order (one stream from config.seed): per dense layer, weights
    uniform in [-0.05, 0.05] row-major, biases zero (no draw); then per
    photonic layer, blocks in layout order with angles uniform in [0, 2pi)
    and squeeze/displacement magnitudes normal with sigma 0.1.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    widths = (784,) + config.encoder_widths
    classical = []
    for i in range(len(widths) - 1):
        w = rng.uniform(-0.05, 0.05, size=(widths[i + 1], widths[i]))
        act = "elu" if i < len(widths) - 2 else "identity"
        classical.append(ClassicalLayer(w, np.zeros(widths[i + 1]), act))
    m = config.modes
    quantum = []
    for _ in range(config.layers):
        quantum.append(
            QnnLayerParams(
                bs1_theta=rng.uniform(0, 2 * np.pi, m - 1),
                bs1_phi=rng.uniform(0, 2 * np.pi, m - 1),
                rot1_phi=rng.uniform(0, 2 * np.pi, m),
                squeeze_r=rng.normal(0.0, 0.1, m),
                bs2_theta=rng.uniform(0, 2 * np.pi, m - 1),
                bs2_phi=rng.uniform(0, 2 * np.pi, m - 1),
                rot2_phi=rng.uniform(0, 2 * np.pi, m),
                disp_r=rng.normal(0.0, 0.1, m),
                kerr_kappa=rng.uniform(0, 2 * np.pi, m),
            )
        )
    return ModelParams(tuple(classical), tuple(quantum))


def _as_model_params(config: HybridModelConfig, params) -> ModelParams:
    if isinstance(params, ModelParams):
        return params
    return ModelParams.from_vector(config, params)


def model_forward(config: HybridModelConfig, params, image) -> np.ndarray:
    """Full forward pass: classical encoder, encoding circuit, photonic
    layers, then the configured readout of the normalized final state."""
    mp = _as_model_params(config, params)
    features = classical_forward(mp.classical, image)
    if not np.all(np.isfinite(features)):
        raise TrainingDivergence("classical encoder produced non-finite features")
    state = encode(features, config.cutoff, modes=config.modes)
    _check_norm(state.norm)
    for p in mp.quantum:
        state = qnn_layer(p, state)
        _check_norm(state.norm)
    state = state.normalized()
    if config.measurement == "probability":
        return measure(state, "probability").values
    return measure(state, "expectation", pauli_x()).values


def one_hot(label: int, size: int) -> np.ndarray:
    """Unit vector e_label of the given length."""
    label = int(label)
    if not 0 <= label < size:
        raise ValueError(f"label {label} out of range for {size} outputs")
    vec = np.zeros(size)
    vec[label] = 1.0
    return vec


def pad_onehot(label: int, out_size: int) -> np.ndarray:
    """Ten-class one-hot extended with out_size - 10 trailing zeros."""
    label = int(label)
    if not 0 <= label < 10:
        raise ValueError(f"label must be a digit 0..9, got {label}")
    if out_size < 10:
        raise ValueError(f"output size must be at least 10, got {out_size}")
    return one_hot(label, out_size)


def loss_xent(pred, target) -> float:
    """Categorical cross-entropy -sum(t * ln(p + 1e-12)); p must be >= 0."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if np.min(pred) < 0:
        raise ValueError("cross-entropy needs non-negative predictions")
    return float(-np.sum(target * np.log(pred + _XENT_EPS)))


def loss_mse(pred, target) -> float:
    """Mean squared difference of two equal-length vectors."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return float(np.mean((pred - target) ** 2))


def _loss_fn(config: HybridModelConfig):
    return loss_xent if config.loss == "categorical_crossentropy" else loss_mse


def finite_diff_grad(f, params, delta: float) -> np.ndarray:
    """Central-difference gradient of a scalar function of a vector."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    params = np.asarray(params, dtype=float)
    grad = np.empty_like(params)
    for i in range(params.size):
        shifted = params.copy()
        shifted[i] = params[i] + delta
        f_plus = float(f(shifted))
        shifted[i] = params[i] - delta
        f_minus = float(f(shifted))
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise ValueError(
                f"non-finite function value at coordinate {i}: "
                f"f+={f_plus!r}, f-={f_minus!r}"
            )
        grad[i] = (f_plus - f_minus) / (2.0 * delta)
    return grad


def sgd_step(params, grads, lr: float) -> np.ndarray:
    """One stochastic-gradient-descent update p - lr * g."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape:
        raise ValueError(f"shape mismatch: {params.shape} vs {grads.shape}")
    return params - lr * grads


def _readout(amps: np.ndarray, config: HybridModelConfig) -> np.ndarray:
    """Measurement vector from raw final amplitudes (normalizes first)."""
    norm = float(np.linalg.norm(amps))
    if not norm >= 0.5:
        raise TrainingDivergence(
            f"state norm collapsed to {norm:.3g}; catastrophic truncation leakage"
        )
    psi = amps / norm
    if config.measurement == "probability":
        return np.abs(psi) ** 2
    t = psi.reshape((config.cutoff,) * config.modes)
    out = np.empty(config.modes)
    for j in range(config.modes):
        tj = np.moveaxis(t, j, 0).reshape(config.cutoff, -1)
        out[j] = 2.0 * float(np.real(np.vdot(tj[0], tj[1])))
    return out


class _CircuitCache:
    """Per-parameter-set caches shared by every sample of a batch.

    gate_mats: full-register matrix of each photonic-layer gate, in
    application order over all layers.  after[t] is the product of every
    gate strictly after t; full is the product of all of them.
    """

    def __init__(self, config: HybridModelConfig, mp: ModelParams):
        n, m = config.cutoff, config.modes
        dim = n**m
        self.small_gates = []
        self.gate_mats = []
        for p in mp.quantum:
            for kind, j in _layer_gate_table(m):
                gate = _layer_small_gate(kind, j, p, n)
                self.small_gates.append(gate)
                if gate.arity == 1:
                    self.gate_mats.append(embed_single_mode(gate, j, m).matrix)
                else:
                    self.gate_mats.append(embed_two_mode(gate, j, m).matrix)
        count = len(self.gate_mats)
        self.after = [None] * count
        acc = np.eye(dim, dtype=complex)
        for t in range(count - 1, -1, -1):
            self.after[t] = acc
            acc = acc @ self.gate_mats[t]
        self.full = acc


def _encode_states(p: EncodingParams, n: int):
    """Prefix states and small gates along the encoding circuit."""
    m = p.modes
    state = fock_basis_state([0] * m, n)
    states, gates = [state], []
    for kind, j in _encode_gate_table(m):
        gate = _encode_small_gate(kind, j, p, n)
        gates.append(gate)
        state = apply(gate, state, mode=j)
        states.append(state)
    return states, gates


def _sample_loss(config, cache, mp, image, label):
    """Loss and correctness of one sample under cached layer products."""
    features = classical_forward(mp.classical, image)
    if not np.all(np.isfinite(features)):
        raise TrainingDivergence("classical encoder produced non-finite features")
    psi_enc = encode(features, config.cutoff, modes=config.modes)
    pred = _readout(cache.full @ psi_enc.amplitudes, config)
    target = one_hot(label, config.output_size)
    return _loss_fn(config)(pred, target), int(np.argmax(pred)) == int(label)


def _sample_gradient(config, cache, mp, image, label):
    """Full parameter gradient of one sample's loss.

    Classical gradients are analytic reverse-mode, chained through a
    central-difference gradient with respect to the encoder output; photonic
    layer parameters are central differences with one small gate rebuilt per
    probe.
    """
    n, m = config.cutoff, config.modes
    delta = config.fd_delta
    loss = _loss_fn(config)
    target = one_hot(label, config.output_size)

    features, cl_caches = _classical_cached(mp.classical, image)
    if not np.all(np.isfinite(features)):
        raise TrainingDivergence("classical encoder produced non-finite features")
    enc = EncodingParams.from_vector(features)
    enc_states, enc_gates = _encode_states(enc, n)
    _check_norm(enc_states[-1].norm)
    enc_table = _encode_gate_table(m)

    # prefix states through the photonic layers
    s = enc_states[-1].amplitudes
    prefix = [s]
    for mat in cache.gate_mats:
        s = mat @ s
        prefix.append(s)
    base_loss = loss(_readout(s, config), target)
    if not np.isfinite(base_loss):
        raise TrainingDivergence(f"non-finite loss {base_loss!r}")

    # probes over photonic layer parameters
    per_layer = layer_param_count(m)
    gates_per_layer = len(_layer_gate_table(m))
    slots = _layer_param_slots(m)
    qgrad = np.empty(config.layers * per_layer)
    for li, p in enumerate(mp.quantum):
        lv = p.to_vector()
        for i, (slot, kind, j) in enumerate(slots):
            t = li * gates_per_layer + slot
            probes = []
            for sign in (delta, -delta):
                shifted = lv.copy()
                shifted[i] += sign
                p2 = QnnLayerParams.from_vector(shifted)
                gate = _layer_small_gate(kind, j, p2, n)
                if gate.arity == 1:
                    mat = embed_single_mode(gate, j, m).matrix
                else:
                    mat = embed_two_mode(gate, j, m).matrix
                probes.append(loss(_readout(cache.after[t] @ (mat @ prefix[t]), config), target))
            qgrad[li * per_layer + i] = (probes[0] - probes[1]) / (2 * delta)

    # probes over the encoder output, one encoding gate rebuilt per probe
    fgrad = np.empty(features.size)
    for i, (slot, kind, j) in enumerate(_encode_param_slots(m)):
        probes = []
        for sign in (delta, -delta):
            shifted = features.copy()
            shifted[i] += sign
            e2 = EncodingParams.from_vector(shifted)
            state = apply(_encode_small_gate(kind, j, e2, n), enc_states[slot], mode=j)
            for later in range(slot + 1, len(enc_table)):
                state = apply(enc_gates[later], state, mode=enc_table[later][1])
            probes.append(loss(_readout(cache.full @ state.amplitudes, config), target))
        fgrad[i] = (probes[0] - probes[1]) / (2 * delta)

    cl_grads = _classical_backward(mp.classical, cl_caches, fgrad)
    parts = []
    for dw, db in cl_grads:
        parts.append(dw.ravel())
        parts.append(db)
    parts.append(qgrad)
    return np.concatenate(parts), base_loss


def _pooled(fn, jobs, workers):
    """Map fn over jobs, optionally in a thread pool, preserving job order."""
    if workers is not None and workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


def batch_gradient(config, params, images, labels, workers=None):
    """Mean loss gradient over a batch, as a flat vector matching
    ModelParams.to_vector, plus the mean base loss.

    Per-sample results are reduced in fixed sample order, so the value is
    independent of the worker count.
    """
    mp = _as_model_params(config, params)
    cache = _CircuitCache(config, mp)
    images = np.asarray(images, dtype=float)
    labels = np.asarray(labels)
    if images.shape[0] != labels.shape[0]:
        raise ValueError(
            f"{images.shape[0]} images but {labels.shape[0]} labels"
        )
    if images.shape[0] == 0:
        raise ValueError("empty batch")
    results = _pooled(
        lambda i: _sample_gradient(config, cache, mp, images[i], labels[i]),
        list(range(images.shape[0])),
        workers,
    )
    grad = results[0][0].copy()
    total_loss = results[0][1]
    for g, l in results[1:]:
        grad += g
        total_loss += l
    count = len(results)
    return grad / count, total_loss / count


def evaluate(config, params, dataset: Dataset, workers=None):
    """Mean loss and accuracy of a parameter set over a dataset."""
    mp = _as_model_params(config, params)
    cache = _CircuitCache(config, mp)
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    results = _pooled(
        lambda i: _sample_loss(config, cache, mp, dataset.images[i], dataset.labels[i]),
        list(range(len(dataset))),
        workers,
    )
    total_loss = results[0][0]
    correct = int(results[0][1])
    for l, c in results[1:]:
        total_loss += l
        correct += int(c)
    return total_loss / len(results), correct / len(results)


@dataclass(frozen=True)
class TrainingHistory:
    """Record of one training run: config echo, per-epoch metrics, final
    flat parameter vector, and wall time."""

    config: dict
    epochs: list
    final_params: np.ndarray
    wall_time_seconds: float

    def __post_init__(self):
        for row in self.epochs:
            if not 0.0 <= row["accuracy"] <= 1.0:
                raise ValueError(f"accuracy out of [0, 1] in {row}")
        object.__setattr__(
            self, "final_params", np.asarray(self.final_params, dtype=float)
        )

    def to_json(self) -> str:
        doc = {
            "config": self.config,
            "epochs": self.epochs,
            "final_params": [float(v) for v in self.final_params],
            "wall_time_seconds": self.wall_time_seconds,
        }
        return json.dumps(doc, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TrainingHistory":
        doc = json.loads(text)
        return cls(
            config=doc["config"],
            epochs=doc["epochs"],
            final_params=np.asarray(doc["final_params"], dtype=float),
            wall_time_seconds=float(doc["wall_time_seconds"]),
        )


def train(config: HybridModelConfig, dataset: Dataset, workers=None, on_epoch=None) -> TrainingHistory:
    """Minibatch SGD over a balanced subset of the dataset.

    Each epoch shuffles the subset with the continuing seeded stream, walks
    it in batches of config.batch_size, and then records mean loss and
    accuracy over the whole subset.  Non-finite losses or collapsed state
    norms abort with TrainingDivergence.
    """
    start = time.perf_counter()
    subset = take_balanced(dataset, config.samples, config.classes, config.seed)
    rng = np.random.default_rng(config.seed)
    vec = init_params(config, rng=rng).to_vector()
    rows = []
    for epoch in range(config.epochs):
        try:
            perm = rng.permutation(len(subset))
            for lo in range(0, len(subset), config.batch_size):
                idx = perm[lo : lo + config.batch_size]
                grad, _ = batch_gradient(
                    config, vec, subset.images[idx], subset.labels[idx], workers=workers
                )
                vec = sgd_step(vec, grad, config.lr)
            mean_loss, accuracy = evaluate(config, vec, subset, workers=workers)
        except TrainingDivergence as exc:
            raise TrainingDivergence(f"aborted at epoch {epoch}: {exc}") from None
        if not np.isfinite(mean_loss):
            raise TrainingDivergence(f"aborted at epoch {epoch}: loss {mean_loss!r}")
        row = {"epoch": epoch, "loss": float(mean_loss), "accuracy": float(accuracy)}
        rows.append(row)
        if on_epoch is not None:
            on_epoch(row)
    return TrainingHistory(
        config=config.as_dict(),
        epochs=rows,
        final_params=vec,
        wall_time_seconds=time.perf_counter() - start,
    )
