"""Classifier backends: the in-process default and a line-protocol subprocess adapter.

An external backend is any executable speaking newline-delimited JSON on
stdin/stdout:

    {"op": "train", "schema": [...names], "labeled": [{"id", "text", "label"}...],
     "config": {...}}                          -> {"ok": true}
    {"op": "predict_proba", "items": [{"id", "text"}...]}
                                               -> {"probs": [[p0..pK-1], ...]}
    {"op": "shutdown"}                         -> (no reply)

Anything may reply {"error": "..."} instead; stderr passes through untouched.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
import warnings
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .classifier import ClassifierConfig, TrainedModel, train
from .corpus import Dataset, LabeledPost, Post, as_post
from .errors import BackendError, DataError
from .featurizer import FeaturizerConfig, Vocabulary, fit_vocabulary


@dataclass(frozen=True)
class BackendSpec:
    kind: str = "builtin"
    command: str = ""
    timeout: float = 600.0

    def __post_init__(self) -> None:
        if self.kind not in ("builtin", "external"):
            raise DataError(f"unknown backend kind {self.kind!r}")
        if self.kind == "external" and not self.command.strip():
            raise DataError("external backend needs a command")
        if self.timeout <= 0:
            raise DataError(f"timeout must be positive, got {self.timeout}")


class Backend:
    """Train-and-score interface every classifier implementation satisfies."""

    def train(self, train_set: Dataset, valset: Dataset) -> None:
        raise NotImplementedError

    def predict_proba(self, posts: Sequence[Post]) -> np.ndarray:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self) -> "Backend":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


def _require_labeled(dataset: Dataset, role: str) -> list[LabeledPost]:
    items = []
    for item in dataset.items:
        if not isinstance(item, LabeledPost):
            raise DataError(f"{role} contains unlabeled post {as_post(item).id!r}")
        items.append(item)
    if not items:
        raise DataError(f"{role} is empty")
    return items


class BuiltinBackend(Backend):
    """Tf-idf + weighted logistic regression, refit from scratch on every train call.

    Posts either all carry precomputed feature vectors (used directly) or none do
    (texts are featurized; the vocabulary is fit on the training texts only).
    """

    def __init__(
        self,
        schema_size: int,
        featurizer_config: FeaturizerConfig | None = None,
        classifier_config: ClassifierConfig | None = None,
    ) -> None:
        self.featurizer_config = featurizer_config or FeaturizerConfig()
        self.classifier_config = classifier_config or ClassifierConfig(num_classes=schema_size)
        if self.classifier_config.num_classes != schema_size:
            raise DataError(
                f"classifier expects {self.classifier_config.num_classes} classes, "
                f"schema has {schema_size}"
            )
        self._model: TrainedModel | None = None
        self._vocab: Vocabulary | None = None
        self._dense: bool | None = None

    @staticmethod
    def _mode(posts: Sequence[Post]) -> bool:
        have = [p.features is not None for p in posts]
        if all(have):
            return True
        if not any(have):
            return False
        raise DataError("posts mix precomputed features with raw text")

    def _matrix(self, posts: Sequence[Post]) -> np.ndarray | Any:
        if self._dense:
            dims = {len(p.features) for p in posts}  # type: ignore[arg-type]
            if len(dims) > 1:
                raise DataError(f"inconsistent feature widths: {sorted(dims)}")
            return np.asarray([p.features for p in posts], dtype=np.float64)
        assert self._vocab is not None
        return self._vocab.transform_matrix([p.text for p in posts])

    def train(self, train_set: Dataset, valset: Dataset) -> None:
        train_items = _require_labeled(train_set, "training set")
        val_items = _require_labeled(valset, "validation set")
        posts = [item.post for item in train_items]
        self._dense = self._mode([item.post for item in train_items + val_items])
        if not self._dense:
            self._vocab = fit_vocabulary(
                (p.text for p in posts), self.featurizer_config
            )
        x = self._matrix(posts)
        y = [item.label for item in train_items]
        x_val = self._matrix([item.post for item in val_items])
        y_val = [item.label for item in val_items]
        self._model = train(x, y, x_val, y_val, self.classifier_config)

    def predict_proba(self, posts: Sequence[Post]) -> np.ndarray:
        if self._model is None:
            raise BackendError("predict_proba before train")
        if self._mode(posts) != self._dense:
            raise DataError("prediction posts do not match the trained feature mode")
        return self._model.predict_proba(self._matrix(posts))

    @property
    def model(self) -> TrainedModel:
        if self._model is None:
            raise BackendError("backend has not been trained")
        return self._model


class ExternalBackend(Backend):
    """Bridges the Backend interface to a child process speaking the line protocol."""

    def __init__(
        self,
        spec: BackendSpec,
        schema_names: Sequence[str],
        config: dict[str, Any] | None = None,
    ) -> None:
        if spec.kind != "external":
            raise DataError(f"ExternalBackend got a {spec.kind!r} spec")
        self.spec = spec
        self.schema_names = list(schema_names)
        self.config = dict(config or {})
        self._lines: queue.Queue[str | None] = queue.Queue()
        try:
            self._proc = subprocess.Popen(
                shlex.split(spec.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=None,  # passes through to our stderr
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise BackendError(f"could not start backend {spec.command!r}: {exc}") from exc
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._closed = False

    def _pump(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _die(self, why: str) -> BackendError:
        self._proc.kill()
        self._proc.wait()
        self._closed = True
        return BackendError(f"backend {self.spec.command!r} {why}")

    def _send(self, message: dict[str, Any]) -> None:
        if self._closed or self._proc.stdin is None:
            raise BackendError(f"backend {self.spec.command!r} is closed")
        try:
            self._proc.stdin.write(json.dumps(message) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            rc = self._proc.wait()
            self._closed = True
            raise BackendError(
                f"backend {self.spec.command!r} exited with code {rc} mid-request"
            ) from None

    def _recv(self) -> dict[str, Any]:
        try:
            line = self._lines.get(timeout=self.spec.timeout)
        except queue.Empty:
            raise self._die(f"timed out after {self.spec.timeout}s") from None
        if line is None:
            rc = self._proc.wait()
            self._closed = True
            raise BackendError(
                f"backend {self.spec.command!r} exited with code {rc} before replying"
            )
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise self._die(f"sent invalid JSON: {exc}") from None
        if not isinstance(reply, dict):
            raise self._die(f"sent a non-object reply: {line.strip()[:80]}")
        if "error" in reply:
            raise BackendError(f"backend {self.spec.command!r}: {reply['error']}")
        return reply

    def train(self, train_set: Dataset, valset: Dataset) -> None:
        items = _require_labeled(train_set, "training set")
        _require_labeled(valset, "validation set")
        # The protocol carries no validation split; backends hold out their own.
        self._send(
            {
                "op": "train",
                "schema": self.schema_names,
                "labeled": [
                    {"id": it.post.id, "text": it.post.text, "label": it.label} for it in items
                ],
                "config": self.config,
            }
        )
        reply = self._recv()
        if reply.get("ok") is not True:
            raise self._die(f"did not acknowledge training: {reply!r}")

    def predict_proba(self, posts: Sequence[Post]) -> np.ndarray:
        self._send(
            {"op": "predict_proba", "items": [{"id": p.id, "text": p.text} for p in posts]}
        )
        reply = self._recv()
        probs = reply.get("probs")
        k = len(self.schema_names)
        if not isinstance(probs, list) or len(probs) != len(posts):
            raise self._die(f"returned {0 if not isinstance(probs, list) else len(probs)} rows "
                            f"for {len(posts)} items")
        matrix = np.asarray(probs, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != k:
            raise self._die(f"probability rows are not length {k}")
        if not np.all(np.isfinite(matrix)) or np.any(matrix < 0):
            raise self._die("returned negative or non-finite probabilities")
        sums = matrix.sum(axis=1)
        if np.any(sums <= 0):
            raise self._die("returned an all-zero probability row")
        worst = float(np.max(np.abs(sums - 1.0)))
        if worst > 1e-6:
            warnings.warn(
                f"backend {self.spec.command!r} rows sum off by {worst:.3g}; renormalizing",
                stacklevel=2,
            )
        return matrix / sums[:, None]

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            if self._proc.stdin is not None:
                self._proc.stdin.write(json.dumps({"op": "shutdown"}) + "\n")
                self._proc.stdin.flush()
                self._proc.stdin.close()
        except (BrokenPipeError, OSError):
            pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()


def make_backend(
    spec: BackendSpec,
    num_classes: int,
    schema_names: Sequence[str],
    featurizer_config: FeaturizerConfig | None = None,
    classifier_config: ClassifierConfig | None = None,
) -> Backend:
    if spec.kind == "builtin":
        return BuiltinBackend(num_classes, featurizer_config, classifier_config)
    config: dict[str, Any] = {"num_classes": num_classes}
    if classifier_config is not None:
        config.update(
            {
                "learning_rate": classifier_config.learning_rate,
                "epochs": classifier_config.epochs,
                "batch_size": classifier_config.batch_size,
                "seed": classifier_config.seed,
            }
        )
    return ExternalBackend(spec, schema_names, config)


def validation_accuracy(backend: Backend, valset: Dataset) -> float:
    """Accuracy of the backend's argmax prediction over a labeled validation set."""
    items = _require_labeled(valset, "validation set")
    probs = backend.predict_proba([item.post for item in items])
    predicted = np.argmax(probs, axis=1)
    actual = np.asarray([item.label for item in items])
    return float(np.mean(predicted == actual))
