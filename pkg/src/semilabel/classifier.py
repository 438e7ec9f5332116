"""Multinomial logistic-regression classifier trained with Adam on a class-weighted loss.

The weight matrix has shape (dim + 1, num_classes); row 0 is the bias. Feature
matrices may be dense ndarrays or scipy CSR.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DataError


@dataclass(frozen=True)
class ClassifierConfig:
    num_classes: int
    class_weights: tuple[float, ...] | None = None  # None: inverse class frequency of train set
    learning_rate: float = 0.05
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise DataError(f"num_classes must be at least 2, got {self.num_classes}")
        if self.class_weights is not None:
            if len(self.class_weights) != self.num_classes:
                raise DataError(
                    f"expected {self.num_classes} class weights, got {len(self.class_weights)}"
                )
            if any(w <= 0 for w in self.class_weights):
                raise DataError("class weights must be positive")
        if not np.isfinite(self.learning_rate) or self.learning_rate < 0:
            raise DataError(f"learning_rate must be nonnegative, got {self.learning_rate}")
        if self.epochs < 1:
            raise DataError(f"epochs must be positive, got {self.epochs}")
        if self.batch_size < 1:
            raise DataError(f"batch_size must be positive, got {self.batch_size}")


def inverse_class_frequency(counts: Sequence[int]) -> tuple[float, ...]:
    """w_c = N / (K * n_c): rare classes weigh more, mean weight is at most 1."""
    if any(c <= 0 for c in counts):
        missing = [i for i, c in enumerate(counts) if c <= 0]
        raise DataError(f"cannot weight classes with no examples: {missing}")
    total = sum(counts)
    k = len(counts)
    return tuple(total / (k * c) for c in counts)


def _check_finite(x: np.ndarray | sp.csr_matrix) -> None:
    data = x.data if sp.issparse(x) else x
    if not np.all(np.isfinite(data)):
        raise DataError("feature matrix contains non-finite values")


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _logits(weights: np.ndarray, x: np.ndarray | sp.csr_matrix) -> np.ndarray:
    return np.asarray(x @ weights[1:]) + weights[0]


def loss_and_grad(
    weights: np.ndarray,
    x: np.ndarray | sp.csr_matrix,
    y: np.ndarray,
    class_weights: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Class-weighted cross-entropy (normalized by total sample weight) and its gradient.

    Normalizing by the summed weights rather than the count makes the loss invariant
    to rescaling the weight vector.
    """
    _check_finite(x)
    n = x.shape[0]
    if n == 0:
        raise DataError("cannot evaluate loss on an empty batch")
    log_p = _log_softmax(_logits(weights, x))
    sample_w = class_weights[y]
    w_total = sample_w.sum()
    loss = -(sample_w * log_p[np.arange(n), y]).sum() / w_total

    delta = np.exp(log_p)
    delta[np.arange(n), y] -= 1.0
    delta *= (sample_w / w_total)[:, None]
    grad = np.empty_like(weights)
    grad[0] = delta.sum(axis=0)
    grad[1:] = np.asarray(x.T @ delta)
    return float(loss), grad


@dataclass(eq=False)
class TrainedModel:
    weights: np.ndarray
    config: ClassifierConfig
    best_val_accuracy: float
    best_epoch: int

    def predict_proba(self, x: np.ndarray | sp.csr_matrix) -> np.ndarray:
        if x.shape[1] != self.weights.shape[0] - 1:
            raise DataError(
                f"feature dim {x.shape[1]} does not match model dim {self.weights.shape[0] - 1}"
            )
        _check_finite(x)
        return np.exp(_log_softmax(_logits(self.weights, x)))

    def predict(self, x: np.ndarray | sp.csr_matrix) -> np.ndarray:
        # argmax resolves ties toward the lowest class index
        return np.argmax(self.predict_proba(x), axis=1)

    def accuracy(self, x: np.ndarray | sp.csr_matrix, y: np.ndarray) -> float:
        if x.shape[0] == 0:
            raise DataError("cannot score an empty evaluation set")
        return float(np.mean(self.predict(x) == np.asarray(y)))


def train(
    x: np.ndarray | sp.csr_matrix,
    y: Sequence[int] | np.ndarray,
    x_val: np.ndarray | sp.csr_matrix,
    y_val: Sequence[int] | np.ndarray,
    config: ClassifierConfig,
) -> TrainedModel:
    """Minibatch Adam from zero-initialized weights, keeping the epoch checkpoint with
    the best validation accuracy (earliest epoch on ties)."""
    y = np.asarray(y, dtype=np.int64)
    y_val = np.asarray(y_val, dtype=np.int64)
    n = x.shape[0]
    if n == 0:
        raise DataError("training set is empty")
    if x_val.shape[0] == 0:
        raise DataError("validation set is empty")
    if y.shape[0] != n:
        raise DataError(f"{n} rows but {y.shape[0]} labels")
    if y.min() < 0 or y.max() >= config.num_classes:
        raise DataError("training label out of range")
    _check_finite(x)

    counts = np.bincount(y, minlength=config.num_classes)
    if np.any(counts == 0):
        absent = np.flatnonzero(counts == 0).tolist()
        raise DataError(f"classes absent from training data: {absent}")
    if config.class_weights is not None:
        class_weights = np.asarray(config.class_weights, dtype=np.float64)
    else:
        class_weights = np.asarray(inverse_class_frequency(counts.tolist()))

    dim = x.shape[1]
    weights = np.zeros((dim + 1, config.num_classes))
    m = np.zeros_like(weights)
    v = np.zeros_like(weights)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    t = 0
    rng = np.random.default_rng(config.seed)

    best_weights = weights.copy()
    best_acc = -1.0
    best_epoch = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            _, grad = loss_and_grad(weights, x[batch], y[batch], class_weights)
            t += 1
            m = beta1 * m + (1 - beta1) * grad
            v = beta2 * v + (1 - beta2) * grad**2
            m_hat = m / (1 - beta1**t)
            v_hat = v / (1 - beta2**t)
            weights -= config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        probe = TrainedModel(weights, config, 0.0, epoch)
        acc = probe.accuracy(x_val, y_val)
        if acc > best_acc:
            best_acc = acc
            best_epoch = epoch
            best_weights = weights.copy()
    return TrainedModel(best_weights, config, best_acc, best_epoch)
