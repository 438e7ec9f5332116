"""Self-training loop with stratified confidence sampling.

Each round trains the backend on labeled + pseudo-labeled posts, scores the
remaining pool, and promotes the most confident fraction of each predicted
class. Once the pool is small (or rounds run out) one final model labels the
remainder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .backends import Backend, validation_accuracy
from .corpus import (
    ORIGIN_GROUND_TRUTH,
    ORIGIN_PSEUDO,
    Dataset,
    LabeledPost,
    Post,
    as_post,
    class_counts,
)
from .errors import BackendError, DataError
from .ioutil import atomic_write_jsonl


@dataclass(frozen=True)
class SelfTrainConfig:
    acquisition_rate: float = 0.25
    stop_threshold: int = 200
    max_iterations: int = 50

    def __post_init__(self) -> None:
        if not 0 < self.acquisition_rate <= 1:
            raise DataError(
                f"acquisition_rate must be in (0, 1], got {self.acquisition_rate}"
            )
        if self.stop_threshold < 0:
            raise DataError(f"stop_threshold must be nonnegative, got {self.stop_threshold}")
        if self.max_iterations < 1:
            raise DataError(f"max_iterations must be positive, got {self.max_iterations}")


@dataclass(frozen=True)
class Acquired:
    id: str
    label: int
    confidence: float


@dataclass(frozen=True)
class AcquisitionResult:
    selected: tuple[Acquired, ...]
    per_class_counts: tuple[int, ...]


@dataclass(frozen=True)
class IterationRecord:
    iteration: int  # 1-based
    remaining: int  # pool size after this round's removals
    acquired_per_class: tuple[int, ...]
    val_accuracy: float


def scs_select(
    probs: np.ndarray, ids: Sequence[str], fraction: float, num_classes: int
) -> AcquisitionResult:
    """Pick the top floor(fraction * m_r) most confident items of each predicted class r.

    Confidence is the max row probability; argmax ties go to the lower class index,
    confidence ties to the lexicographically smaller id.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[1] != num_classes:
        raise DataError(f"probability matrix must be (n, {num_classes}), got {probs.shape}")
    if probs.shape[0] != len(ids):
        raise DataError(f"{probs.shape[0]} probability rows for {len(ids)} ids")
    if len(set(ids)) != len(ids):
        raise DataError("candidate ids must be unique")
    if not 0 < fraction <= 1:
        raise DataError(f"fraction must be in (0, 1], got {fraction}")
    predicted = np.argmax(probs, axis=1)
    confidence = probs.max(axis=1)
    selected: list[Acquired] = []
    counts = []
    for r in range(num_classes):
        members = [
            (ids[i], float(confidence[i])) for i in np.flatnonzero(predicted == r)
        ]
        take = int(math.floor(fraction * len(members)))
        members.sort(key=lambda m: (-m[1], m[0]))
        counts.append(take)
        selected.extend(Acquired(mid, r, conf) for mid, conf in members[:take])
    return AcquisitionResult(tuple(selected), tuple(counts))


def label_remainder(backend: Backend, posts: Sequence[Post]) -> list[Acquired]:
    """Argmax-label whatever is left in the pool with the current model."""
    if not posts:
        return []
    probs = backend.predict_proba(posts)
    predicted = np.argmax(probs, axis=1)
    confidence = probs.max(axis=1)
    return [
        Acquired(post.id, int(predicted[i]), float(confidence[i]))
        for i, post in enumerate(posts)
    ]


def _check_inputs(labeled: Dataset, unlabeled: Dataset, valset: Dataset) -> None:
    if labeled.schema != unlabeled.schema or labeled.schema != valset.schema:
        raise DataError("labeled, unlabeled, and validation sets must share a schema")
    counts = class_counts(labeled)  # also rejects unlabeled items
    missing = [labeled.schema.name_of(i) for i, c in enumerate(counts) if c == 0]
    if missing:
        raise DataError(f"labeled set has no examples of: {', '.join(missing)}")
    for item in unlabeled.items:
        if isinstance(item, LabeledPost):
            raise DataError(f"unlabeled pool contains labeled post {item.post.id!r}")
    for item in valset.items:
        if not isinstance(item, LabeledPost) or item.origin != ORIGIN_GROUND_TRUTH:
            raise DataError(
                f"validation post {as_post(item).id!r} must carry a ground-truth label"
            )
    pool_ids = set(unlabeled.ids())
    overlap = pool_ids & set(labeled.ids())
    if overlap:
        raise DataError(f"posts in both labeled set and pool: {sorted(overlap)[:5]}")
    overlap = pool_ids & set(valset.ids())
    if overlap:
        raise DataError(f"posts in both validation set and pool: {sorted(overlap)[:5]}")


def self_train(
    labeled: Dataset,
    unlabeled: Dataset,
    valset: Dataset,
    backend: Backend,
    config: SelfTrainConfig = SelfTrainConfig(),
) -> tuple[Dataset, list[IterationRecord]]:
    """Pseudo-label every post in `unlabeled`.

    Returns the pool in its original order with pseudo labels and confidences
    attached, plus one record per acquisition round.
    """
    _check_inputs(labeled, unlabeled, valset)
    remaining: list[Post] = list(unlabeled.posts)
    acquired: dict[str, Acquired] = {}
    acquired_order: list[Acquired] = []
    records: list[IterationRecord] = []
    schema = labeled.schema
    fresh = False  # does the backend reflect the current labeled + pseudo pool?

    def pool() -> Dataset:
        extra = tuple(
            LabeledPost(post_of[a.id], a.label, ORIGIN_PSEUDO, a.confidence)
            for a in acquired_order
        )
        return Dataset(schema, labeled.items + extra)

    post_of = {p.id: p for p in unlabeled.posts}
    iteration = 0
    while remaining and len(remaining) >= config.stop_threshold and iteration < config.max_iterations:
        iteration += 1
        try:
            backend.train(pool(), valset)
            fresh = True
            probs = backend.predict_proba(remaining)
        except BackendError as exc:
            raise BackendError(f"iteration {iteration}: {exc}") from exc
        result = scs_select(
            probs, [p.id for p in remaining], config.acquisition_rate, schema.num_classes
        )
        if not result.selected:
            break
        for a in result.selected:
            acquired[a.id] = a
            acquired_order.append(a)
        remaining = [p for p in remaining if p.id not in acquired]
        fresh = False
        records.append(
            IterationRecord(
                iteration=iteration,
                remaining=len(remaining),
                acquired_per_class=result.per_class_counts,
                val_accuracy=validation_accuracy(backend, valset),
            )
        )

    if remaining:
        try:
            if not fresh:
                backend.train(pool(), valset)
                fresh = True
            for a in label_remainder(backend, remaining):
                acquired[a.id] = a
                acquired_order.append(a)
        except BackendError as exc:
            raise BackendError(f"remainder labeling: {exc}") from exc

    items = tuple(
        LabeledPost(post_of[p.id], acquired[p.id].label, ORIGIN_PSEUDO, acquired[p.id].confidence)
        for p in unlabeled.posts
    )
    return Dataset(schema, items), records


def write_trace(path: str | Path, records: Sequence[IterationRecord]) -> None:
    """One JSONL row per acquisition round."""
    atomic_write_jsonl(
        path,
        [
            {
                "iter": r.iteration,
                "remaining": r.remaining,
                "acquired": list(r.acquired_per_class),
                "val_accuracy": r.val_accuracy,
            }
            for r in records
        ],
    )
