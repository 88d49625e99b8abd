"""Scikit-learn estimator facade over the hybrid classifier.

CvqnnClassifier wraps config construction, balanced subset selection, and
the seeded training loop behind the usual fit/predict surface, so the model
composes with pipelines, grid search, and clone.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .dataio import Dataset, take_balanced
from .qnn import HybridModelConfig, ModelParams, model_forward, train

__all__ = ["CvqnnClassifier"]


class CvqnnClassifier(BaseEstimator, ClassifierMixin):
    """Hybrid classical-quantum photonic classifier.

    Rows of X are flattened 28x28 images with pixels in [0, 1]; y holds
    integer digit labels.  fit trains on a balanced subset (all of the data
    when it is already balanced and samples is None), predict returns the
    label whose model output is largest among the class outputs.  The
    training history records accuracy under the stricter convention where a
    padded, non-class output winning the argmax counts as a miss.
    """

    def __init__(
        self,
        modes=2,
        cutoff=2,
        layers=1,
        epochs=10,
        lr=0.05,
        loss="categorical_crossentropy",
        measurement="probability",
        encoder_widths=None,
        samples=None,
        seed=42,
        batch_size=16,
        fd_delta=1e-6,
        workers=None,
    ):
        self.modes = modes
        self.cutoff = cutoff
        self.layers = layers
        self.epochs = epochs
        self.lr = lr
        self.loss = loss
        self.measurement = measurement
        self.encoder_widths = encoder_widths
        self.samples = samples
        self.seed = seed
        self.batch_size = batch_size
        self.fd_delta = fd_delta
        self.workers = workers

    def _encode_labels(self, y):
        y = np.asarray(y)
        if not np.issubdtype(y.dtype, np.integer):
            as_int = y.astype(int)
            if not np.array_equal(as_int, y):
                raise ValueError("labels must be integers")
            y = as_int
        classes = np.unique(y)
        if classes.size < 2:
            raise ValueError(f"need at least 2 classes, got {classes.size}")
        return classes, np.searchsorted(classes, y)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        classes, y_enc = self._encode_labels(y)
        dataset = Dataset(X, y_enc)
        if self.samples is None:
            counts = np.bincount(y_enc, minlength=classes.size)
            total = int(classes.size * counts.min())
        else:
            total = int(self.samples)
        config = HybridModelConfig(
            modes=self.modes,
            cutoff=self.cutoff,
            layers=self.layers,
            classes=int(classes.size),
            samples=total,
            epochs=self.epochs,
            measurement=self.measurement,
            loss=self.loss,
            encoder_widths=self.encoder_widths,
            lr=self.lr,
            seed=self.seed,
            batch_size=self.batch_size,
            fd_delta=self.fd_delta,
        )
        history = train(config, dataset, workers=self.workers)
        self.classes_ = classes
        self.config_ = config
        self.history_ = history
        self.model_params_ = ModelParams.from_vector(config, history.final_params)
        self.n_features_in_ = X.shape[1]
        return self

    def _outputs(self, X):
        check_is_fitted(self, "model_params_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        return np.stack(
            [model_forward(self.config_, self.model_params_, row) for row in X]
        )

    def predict(self, X):
        out = self._outputs(X)
        best = np.argmax(out[:, : self.classes_.size], axis=1)
        return self.classes_[best]

    def predict_proba(self, X):
        if self.measurement != "probability":
            raise ValueError(
                "predict_proba needs measurement='probability', "
                f"got {self.measurement!r}"
            )
        out = self._outputs(X)
        cols = out[:, : self.classes_.size]
        return cols / cols.sum(axis=1, keepdims=True)
