"""Multi-class metrics and the cross-validation harness that compares plain
supervised training against training augmented with pseudo-labeled data."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .backends import Backend
from .corpus import (
    ORIGIN_GROUND_TRUTH,
    Dataset,
    LabeledPost,
    as_post,
    fold_split,
    merge_datasets,
    stratified_kfold,
)
from .errors import BackendError, DataError
from .ioutil import atomic_write_text
from .selftrain import Acquired, AcquisitionResult


def confusion(
    y_true: Sequence[int], y_pred: Sequence[int], num_classes: int
) -> np.ndarray:
    """K x K counts; rows index the true class, columns the predicted class."""
    if len(y_true) != len(y_pred):
        raise DataError(f"{len(y_true)} true labels vs {len(y_pred)} predictions")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        if not (0 <= t < num_classes and 0 <= p < num_classes):
            raise DataError(f"label pair ({t}, {p}) out of range [0, {num_classes})")
        cm[t, p] += 1
    return cm


@dataclass(frozen=True)
class ClassReport:
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    support: tuple[float, ...]
    micro_f1: float
    macro_f1: float
    weighted_f1: float

    def as_dict(self) -> dict[str, Any]:
        return {
            "precision": list(self.precision),
            "recall": list(self.recall),
            "f1": list(self.f1),
            "support": list(self.support),
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
        }


def report(cm: np.ndarray) -> ClassReport:
    """Per-class precision/recall/F1 plus micro (= accuracy), macro, and
    support-weighted F1. Absent classes score 0 and still count toward the macro
    average; every vanishing denominator yields 0."""
    cm = np.asarray(cm)
    total = int(cm.sum())
    if total == 0:
        raise DataError("empty confusion matrix")
    diag = np.diag(cm).astype(np.float64)
    rows = cm.sum(axis=1).astype(np.float64)  # true-class support
    cols = cm.sum(axis=0).astype(np.float64)  # predicted-class counts
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(cols > 0, diag / cols, 0.0)
        recall = np.where(rows > 0, diag / rows, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / denom, 0.0)
    return ClassReport(
        precision=tuple(precision.tolist()),
        recall=tuple(recall.tolist()),
        f1=tuple(f1.tolist()),
        support=tuple(rows.tolist()),
        micro_f1=float(diag.sum() / total),
        macro_f1=float(f1.mean()),
        weighted_f1=float((rows / total * f1).sum()),
    )


@dataclass(frozen=True)
class CVReport:
    folds: tuple[ClassReport, ...]
    mean: ClassReport
    std: ClassReport  # population std across folds

    def as_dict(self) -> dict[str, Any]:
        return {
            "folds": [fold.as_dict() for fold in self.folds],
            "mean": self.mean.as_dict(),
            "std": self.std.as_dict(),
        }


def _aggregate(folds: Sequence[ClassReport]) -> tuple[ClassReport, ClassReport]:
    def stack(pick: Callable[[ClassReport], Any]) -> np.ndarray:
        return np.asarray([pick(fold) for fold in folds], dtype=np.float64)

    def collapse(reduce: Callable[[np.ndarray], np.ndarray]) -> ClassReport:
        return ClassReport(
            precision=tuple(reduce(stack(lambda r: r.precision)).tolist()),
            recall=tuple(reduce(stack(lambda r: r.recall)).tolist()),
            f1=tuple(reduce(stack(lambda r: r.f1)).tolist()),
            support=tuple(reduce(stack(lambda r: r.support)).tolist()),
            micro_f1=float(reduce(stack(lambda r: r.micro_f1))),
            macro_f1=float(reduce(stack(lambda r: r.macro_f1))),
            weighted_f1=float(reduce(stack(lambda r: r.weighted_f1))),
        )

    return (
        collapse(lambda a: np.mean(a, axis=0)),
        collapse(lambda a: np.std(a, axis=0)),  # population convention
    )


def cross_validate(
    labeled: Dataset,
    extra_training: Dataset | None,
    backend_factory: Callable[[int], Backend],
    k: int = 5,
    base_seed: int = 0,
    parallel: int = 1,
) -> CVReport:
    """Stratified k-fold over the ground-truth set; extra (pseudo/corrected) data
    joins every training split but never a validation fold."""
    for item in labeled.items:
        if not isinstance(item, LabeledPost) or item.origin != ORIGIN_GROUND_TRUTH:
            raise DataError(
                f"cross-validation labels must be ground truth; offending post "
                f"{as_post(item).id!r}"
            )
    if extra_training is not None:
        if extra_training.schema != labeled.schema:
            raise DataError("extra training data uses a different schema")
        collisions = set(labeled.ids()) & set(extra_training.ids())
        if collisions:
            raise DataError(f"extra training ids collide with labeled: {sorted(collisions)[:5]}")
    if parallel < 1:
        raise DataError(f"parallel must be positive, got {parallel}")
    folds = stratified_kfold(labeled, k, base_seed)
    num_classes = labeled.schema.num_classes

    def one_fold(f: int) -> ClassReport:
        train_gt, val = fold_split(labeled, folds, f)
        train_set = merge_datasets(train_gt, extra_training) if extra_training else train_gt
        try:
            with backend_factory(base_seed + f) as backend:
                backend.train(train_set, val)
                probs = backend.predict_proba(val.posts)
        except BackendError as exc:
            raise BackendError(f"fold {f}: {exc}") from exc
        y_pred = np.argmax(probs, axis=1)
        return report(confusion(val.labels(), y_pred.tolist(), num_classes))

    if parallel == 1:
        fold_reports = [one_fold(f) for f in range(k)]
    else:
        with ThreadPoolExecutor(max_workers=min(parallel, k)) as pool:
            futures = [pool.submit(one_fold, f) for f in range(k)]
            fold_reports = [f.result() for f in futures]
    mean, std = _aggregate(fold_reports)
    return CVReport(tuple(fold_reports), mean, std)


def threshold_select(
    probs: np.ndarray, ids: Sequence[str], confidence_threshold: float
) -> AcquisitionResult:
    """The plain acquisition baseline: take every row whose max probability strictly
    exceeds the threshold, regardless of class balance."""
    if not 0 < confidence_threshold < 1:
        raise DataError(
            f"confidence_threshold must be in (0, 1), got {confidence_threshold}"
        )
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[0] != len(ids):
        raise DataError(f"probability matrix {probs.shape} does not match {len(ids)} ids")
    predicted = np.argmax(probs, axis=1)
    confidence = probs.max(axis=1)
    counts = [0] * probs.shape[1]
    selected = []
    for i, item_id in enumerate(ids):
        if confidence[i] > confidence_threshold:
            selected.append(Acquired(item_id, int(predicted[i]), float(confidence[i])))
            counts[predicted[i]] += 1
    return AcquisitionResult(tuple(selected), tuple(counts))


def format_table(cv: CVReport, class_names: Sequence[str]) -> str:
    """Aligned per-class table of mean (std) metrics plus the aggregate rows."""
    header = f"{'class':<12} {'precision':>14} {'recall':>14} {'f1':>14} {'support':>8}"
    lines = [header, "-" * len(header)]

    def cell(mean: float, std: float) -> str:
        return f"{mean:.3f} ({std:.3f})"

    for c, name in enumerate(class_names):
        lines.append(
            f"{name:<12} {cell(cv.mean.precision[c], cv.std.precision[c]):>14} "
            f"{cell(cv.mean.recall[c], cv.std.recall[c]):>14} "
            f"{cell(cv.mean.f1[c], cv.std.f1[c]):>14} "
            f"{cv.mean.support[c]:>8.1f}"
        )
    lines.append("-" * len(header))
    for label, mean, std in (
        ("micro-F1", cv.mean.micro_f1, cv.std.micro_f1),
        ("macro-F1", cv.mean.macro_f1, cv.std.macro_f1),
        ("weighted-F1", cv.mean.weighted_f1, cv.std.weighted_f1),
    ):
        lines.append(f"{label:<12} {cell(mean, std):>14}")
    return "\n".join(lines) + "\n"


def write_report(path: str | Path, cv: CVReport) -> None:
    """Deterministic JSON: no timestamps, keys sorted."""
    atomic_write_text(Path(path), json.dumps(cv.as_dict(), indent=2, sort_keys=True) + "\n")
