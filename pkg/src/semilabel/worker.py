"""Reference external-backend worker: `python -m semilabel.worker`.

Speaks the line protocol documented in backends.py, backed by the builtin
featurizer and classifier. Useful as a subprocess smoke target and as a template
for wrapping real models in other languages.
"""

from __future__ import annotations

import json
import sys
from typing import Any

from .backends import BuiltinBackend
from .classifier import ClassifierConfig
from .corpus import Dataset, LabeledPost, Post, class_counts, fold_split, make_schema, stratified_kfold
from .errors import DataError


def _build_backend(message: dict[str, Any]) -> tuple[BuiltinBackend, Dataset, Dataset]:
    schema = make_schema(message["schema"])
    config = message.get("config") or {}
    classifier_config = ClassifierConfig(
        num_classes=schema.num_classes,
        learning_rate=float(config.get("learning_rate", 0.05)),
        epochs=int(config.get("epochs", 30)),
        batch_size=int(config.get("batch_size", 32)),
        seed=int(config.get("seed", 0)),
    )
    items = tuple(
        LabeledPost(Post(str(rec["id"]), rec["text"]), int(rec["label"]))
        for rec in message["labeled"]
    )
    dataset = Dataset(schema, items)
    # Hold out a stratified fifth for checkpoint selection when classes allow it.
    if min(class_counts(dataset)) >= 5:
        folds = stratified_kfold(dataset, 5, classifier_config.seed)
        train_set, valset = fold_split(dataset, folds, 0)
    else:
        train_set, valset = dataset, dataset
    return BuiltinBackend(schema.num_classes, classifier_config=classifier_config), train_set, valset


def main() -> int:
    backend: BuiltinBackend | None = None
    out = sys.stdout
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            message = json.loads(line)
            op = message.get("op")
            if op == "shutdown":
                return 0
            if op == "train":
                backend, train_set, valset = _build_backend(message)
                backend.train(train_set, valset)
                reply: dict[str, Any] = {"ok": True}
            elif op == "predict_proba":
                if backend is None:
                    raise DataError("predict_proba before train")
                posts = [Post(str(it["id"]), it["text"]) for it in message["items"]]
                reply = {"probs": backend.predict_proba(posts).tolist()}
            else:
                raise DataError(f"unknown op {op!r}")
        except Exception as exc:  # report and keep serving
            reply = {"error": f"{type(exc).__name__}: {exc}"}
        out.write(json.dumps(reply) + "\n")
        out.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
