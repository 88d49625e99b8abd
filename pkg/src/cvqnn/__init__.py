"""Truncated-Fock-space simulation of continuous-variable photonic circuits
with a hybrid classical-quantum training harness.

Submodules:
  fock         truncated multi-mode state/operator algebra
  gates        bosonic gate constructors (rotation, squeeze, displace,
               beamsplit, Kerr) via exact matrix exponentials
  measurement  probability and expectation readouts
  wigner       Wigner quasiprobability grids for Fock states
  qnn          hybrid classifier: encoder, photonic layers, training loop
  estimator    scikit-learn facade over the classifier
  dataio       IDX (MNIST container) parsing and balanced subset selection
  qubits       discrete-variable cross-checks for the readout circuit
  cli          command-line entry point
"""

__version__ = "0.1.0"

from . import dataio, fock, gates, measurement, qnn, qubits, wigner
from .estimator import CvqnnClassifier
from .qnn import HybridModelConfig, TrainingDivergence, TrainingHistory, train

__all__ = [
    "__version__",
    "CvqnnClassifier",
    "HybridModelConfig",
    "TrainingDivergence",
    "TrainingHistory",
    "train",
    "dataio",
    "fock",
    "gates",
    "measurement",
    "qnn",
    "qubits",
    "wigner",
]
