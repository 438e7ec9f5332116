"""Seeded synthetic fixtures: Gaussian feature blobs with the study corpus's class
mix, plus a scripted oracle annotator for exercising the review workflow end to end.

Class geometry is fixed (independent of the seed) so every seed group faces the
same difficulty: three well-separated classes and a rare fourth class sitting
close to the third, which a small supervised sample resolves poorly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Mapping, Sequence

import numpy as np

from .corpus import DEFAULT_SCHEMA, Dataset, LabeledPost, LabelSchema, Post
from .errors import DataError
from .review import VERDICT_CORRECT, VERDICT_INCORRECT, ReviewStore

# Class shares of the 500-post study corpus: (129, 190, 140, 41) / 500.
TABLE_FRACTIONS = (0.258, 0.380, 0.280, 0.082)


def class_allocation(total: int, fractions: Sequence[float]) -> tuple[int, ...]:
    """Largest-remainder apportionment of `total` items to the given fractions."""
    if total < 0:
        raise DataError(f"total must be nonnegative, got {total}")
    if any(f < 0 for f in fractions):
        raise DataError("fractions must be nonnegative")
    if abs(sum(fractions) - 1.0) > 1e-6:
        raise DataError(f"fractions sum to {sum(fractions)}, expected 1")
    shares = [total * f for f in fractions]
    base = [math.floor(s) for s in shares]
    leftover = total - sum(base)
    by_remainder = sorted(range(len(fractions)), key=lambda c: (-(shares[c] - base[c]), c))
    for c in by_remainder[:leftover]:
        base[c] += 1
    return tuple(base)


@dataclass(frozen=True)
class BlobFixture:
    labeled: Dataset  # ground-truth training pool
    unlabeled: Dataset  # pool to pseudo-label (labels withheld)
    heldout: Dataset  # ground-truth evaluation set
    truth: dict[str, int]  # hidden labels of the unlabeled pool


def _centers(dim: int, separation: float, confusion_gap: float) -> np.ndarray:
    if dim < 4:
        raise DataError(f"need at least 4 dimensions, got {dim}")
    centers = np.zeros((4, dim))
    centers[0, 0] = separation
    centers[1, 1] = separation
    centers[2, 2] = separation
    centers[3, 2] = separation  # class 3 differs from class 2 only along axis 3
    centers[3, 3] = confusion_gap
    return centers


def make_blob_fixture(
    seed: int,
    schema: LabelSchema = DEFAULT_SCHEMA,
    n_labeled: int = 200,
    n_unlabeled: int = 600,
    n_heldout: int = 150,
    dim: int = 24,
    separation: float = 4.0,
    confusion_gap: float = 2.8,
    noise: float = 1.0,
) -> BlobFixture:
    """Draw the three splits from one seeded stream; labels follow TABLE_FRACTIONS."""
    rng = np.random.default_rng(seed)
    centers = _centers(dim, separation, confusion_gap)

    def draw(prefix: str, total: int, labeled: bool) -> tuple[Dataset, dict[str, int]]:
        counts = class_allocation(total, TABLE_FRACTIONS)
        items: list[Post | LabeledPost] = []
        truth: dict[str, int] = {}
        index = 0
        for label, count in enumerate(counts):
            points = rng.normal(centers[label], noise, size=(count, dim))
            for row in points:
                post = Post(f"{prefix}{index:04d}", "", tuple(float(v) for v in row))
                truth[post.id] = label
                items.append(LabeledPost(post, label) if labeled else post)
                index += 1
        return Dataset(schema, tuple(items)), truth

    labeled, _ = draw("L", n_labeled, labeled=True)
    unlabeled, truth = draw("U", n_unlabeled, labeled=False)
    heldout, _ = draw("H", n_heldout, labeled=True)
    return BlobFixture(labeled, unlabeled, heldout, truth)


_EPOCH = datetime(2026, 1, 1, tzinfo=timezone.utc)


def oracle_annotate(
    store: ReviewStore,
    truth: Mapping[str, int],
    annotators: Sequence[str] | None = None,
) -> int:
    """Have every assignee verify each queued item against the generator's labels.

    Verdicts are deterministic (and so are the timestamps), so reruns leave a
    byte-identical annotation log. Returns the number of submissions.
    """
    submitted = 0
    for item in store.items:
        actual = truth.get(item.post.id)
        if actual is None:
            raise DataError(f"no ground truth for queued item {item.post.id!r}")
        assignees = store.item(item.post.id).assignees
        if annotators is not None:
            assignees = tuple(a for a in assignees if a in annotators)
        for annotator in assignees:
            ts = (_EPOCH + timedelta(seconds=submitted)).isoformat()
            if item.consensus.label == actual:
                store.submit(item.post.id, annotator, VERDICT_CORRECT, ts=ts)
            else:
                store.submit(item.post.id, annotator, VERDICT_INCORRECT, actual, ts=ts)
            submitted += 1
    return submitted
