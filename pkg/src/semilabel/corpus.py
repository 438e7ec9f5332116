"""Corpus data model: risk-level schemas, posts, datasets, folds, and JSONL/CSV ingestion."""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator, Mapping, Sequence

from .errors import DataError
from .ioutil import atomic_write_jsonl, read_jsonl

ORIGIN_GROUND_TRUTH = "ground-truth"
ORIGIN_PSEUDO = "pseudo"
ORIGIN_CORRECTED = "corrected"
ORIGINS = (ORIGIN_GROUND_TRUTH, ORIGIN_PSEUDO, ORIGIN_CORRECTED)


@dataclass(frozen=True)
class RiskLevel:
    """One ordered class in a labeling schema."""

    index: int
    name: str


@dataclass(frozen=True)
class LabelSchema:
    """Ordered risk levels; position in `levels` is the class index."""

    levels: tuple[RiskLevel, ...]

    def __post_init__(self) -> None:
        if len(self.levels) < 2:
            raise DataError("a label schema needs at least 2 levels")
        for i, level in enumerate(self.levels):
            if level.index != i:
                raise DataError(
                    f"schema level {level.name!r} has index {level.index}, expected {i}"
                )
        folded = [level.name.casefold() for level in self.levels]
        if len(set(folded)) != len(folded):
            raise DataError("schema level names must be unique (case-insensitive)")

    @property
    def num_classes(self) -> int:
        return len(self.levels)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(level.name for level in self.levels)

    def name_of(self, index: int) -> str:
        return self.levels[index].name

    def parse_label(self, value: Any, where: str = "") -> int:
        """Resolve a label given as an integer index or a (case-insensitive) display name."""
        if isinstance(value, bool):
            raise DataError(f"{where}unknown label {value!r}")
        if isinstance(value, int):
            index = value
        elif isinstance(value, str):
            folded = value.casefold()
            for level in self.levels:
                if level.name.casefold() == folded:
                    return level.index
            try:
                index = int(value)
            except ValueError:
                raise DataError(f"{where}unknown label {value!r}") from None
        else:
            raise DataError(f"{where}unknown label {value!r}")
        if not 0 <= index < self.num_classes:
            raise DataError(f"{where}label index {index} out of range [0, {self.num_classes})")
        return index


def make_schema(names: Sequence[str]) -> LabelSchema:
    return LabelSchema(tuple(RiskLevel(i, name) for i, name in enumerate(names)))


DEFAULT_SCHEMA = make_schema(["Indicator", "Ideation", "Behavior", "Attempt"])


@dataclass(frozen=True)
class Post:
    """One text item. `features` optionally carries a precomputed dense vector."""

    id: str
    text: str
    features: tuple[float, ...] | None = None


@dataclass(frozen=True)
class LabeledPost:
    post: Post
    label: int
    origin: str = ORIGIN_GROUND_TRUTH
    confidence: float | None = None


def as_post(item: Post | LabeledPost) -> Post:
    return item.post if isinstance(item, LabeledPost) else item


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of posts, possibly labeled, under one schema."""

    schema: LabelSchema
    items: tuple[Post | LabeledPost, ...] = ()

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for item in self.items:
            post = as_post(item)
            if not post.id:
                raise DataError("post id must be nonempty")
            if post.id in seen:
                raise DataError(f"duplicate id {post.id!r}")
            seen.add(post.id)
            if post.features is not None and not all(math.isfinite(v) for v in post.features):
                raise DataError(f"non-finite feature value in post {post.id!r}")
            if isinstance(item, LabeledPost):
                if not 0 <= item.label < self.schema.num_classes:
                    raise DataError(
                        f"label {item.label} of post {post.id!r} out of range "
                        f"[0, {self.schema.num_classes})"
                    )
                if item.origin not in ORIGINS:
                    raise DataError(f"unknown origin {item.origin!r} on post {post.id!r}")

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[Post | LabeledPost]:
        return iter(self.items)

    @property
    def posts(self) -> tuple[Post, ...]:
        return tuple(as_post(item) for item in self.items)

    def ids(self) -> tuple[str, ...]:
        return tuple(as_post(item).id for item in self.items)

    @property
    def fully_labeled(self) -> bool:
        return all(isinstance(item, LabeledPost) for item in self.items)

    def labels(self) -> tuple[int, ...]:
        out = []
        for item in self.items:
            if not isinstance(item, LabeledPost):
                raise DataError(f"post {as_post(item).id!r} is unlabeled")
            out.append(item.label)
        return tuple(out)


def class_counts(dataset: Dataset) -> tuple[int, ...]:
    """Per-class item counts; every item must be labeled."""
    counts = [0] * dataset.schema.num_classes
    for label in dataset.labels():
        counts[label] += 1
    return tuple(counts)


def _item_from_record(
    rec: Mapping[str, Any], schema: LabelSchema, record_index: int, where: str
) -> Post | LabeledPost:
    raw_id = rec.get("id")
    if raw_id is None or raw_id == "":
        post_id = f"row{record_index}"
    else:
        post_id = str(raw_id)
    text = rec.get("text")
    if not isinstance(text, str):
        raise DataError(f"{where}missing or non-string 'text' field")

    features = rec.get("features")
    feat_tuple: tuple[float, ...] | None = None
    if features is not None:
        if not isinstance(features, (list, tuple)) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in features
        ):
            raise DataError(f"{where}'features' must be a list of numbers")
        feat_tuple = tuple(float(v) for v in features)

    post = Post(post_id, text, feat_tuple)
    raw_label = rec.get("label")
    if raw_label is None or raw_label == "":
        return post
    label = schema.parse_label(raw_label, where)
    origin = rec.get("origin", ORIGIN_GROUND_TRUTH)
    if origin not in ORIGINS:
        raise DataError(f"{where}unknown origin {origin!r}")
    confidence = rec.get("confidence")
    if confidence is not None:
        confidence = float(confidence)
    return LabeledPost(post, label, origin, confidence)


def load_dataset(
    path: str | Path, format: str = "jsonl", schema: LabelSchema = DEFAULT_SCHEMA
) -> Dataset:
    """Read a dataset file. JSONL is canonical; CSV (header id,text,label) is ingestion-only."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    if format == "jsonl":
        raw = read_jsonl(path)
    elif format == "csv":
        raw = _read_csv(path)
    else:
        raise DataError(f"unknown dataset format {format!r}")
    if not raw:
        raise DataError(f"no records in {path}")
    items = []
    for record_index, (lineno, rec) in enumerate(raw):
        where = f"{path}: line {lineno}: "
        items.append(_item_from_record(rec, schema, record_index, where))
    try:
        return Dataset(schema, tuple(items))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc


def _read_csv(path: Path) -> list[tuple[int, dict[str, Any]]]:
    out: list[tuple[int, dict[str, Any]]] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        if "text" not in reader.fieldnames:
            raise DataError(f"{path}: CSV header must include a 'text' column")
        for row in reader:
            rec = {k: v for k, v in row.items() if k is not None and v not in (None, "")}
            out.append((reader.line_num, rec))
    return out


def save_dataset(dataset: Dataset, path: str | Path, format: str = "jsonl") -> None:
    """Write a dataset as JSONL (labels as display names). Writes are atomic."""
    if format != "jsonl":
        raise DataError(f"save supports only jsonl, not {format!r}")
    records = []
    for item in dataset.items:
        post = as_post(item)
        rec: dict[str, Any] = {"id": post.id, "text": post.text}
        if isinstance(item, LabeledPost):
            rec["label"] = dataset.schema.name_of(item.label)
            rec["origin"] = item.origin
            if item.confidence is not None:
                rec["confidence"] = item.confidence
        if post.features is not None:
            rec["features"] = list(post.features)
        records.append(rec)
    atomic_write_jsonl(path, records)


def merge_datasets(a: Dataset, b: Dataset) -> Dataset:
    """Concatenate two datasets with identical schemas and disjoint ids."""
    if a.schema != b.schema:
        raise DataError("cannot merge datasets with different schemas")
    collisions = set(a.ids()) & set(b.ids())
    if collisions:
        some = sorted(collisions)[:5]
        raise DataError(f"id collision on merge: {', '.join(some)}")
    return Dataset(a.schema, a.items + b.items)


@dataclass(frozen=True)
class FoldAssignment:
    """Maps every item id to one of k folds."""

    k: int
    fold_of: Mapping[str, int]

    def fold_ids(self, fold: int) -> tuple[str, ...]:
        return tuple(i for i, f in self.fold_of.items() if f == fold)


def stratified_kfold(dataset: Dataset, k: int, seed: int) -> FoldAssignment:
    """Split a labeled dataset into k folds, per-class counts differing by at most 1.

    Deterministic for a given seed. Within each class, items are shuffled and dealt
    cyclically; the dealing offset rotates across classes so total fold sizes stay
    balanced too.
    """
    if k < 2:
        raise DataError(f"k must be at least 2, got {k}")
    counts = class_counts(dataset)
    smallest = min(counts)
    if k > smallest:
        raise DataError(f"k={k} exceeds the smallest class count ({smallest})")
    by_class: list[list[str]] = [[] for _ in counts]
    for item in dataset.items:
        assert isinstance(item, LabeledPost)
        by_class[item.label].append(item.post.id)
    rng = random.Random(seed)
    fold_of: dict[str, int] = {}
    offset = 0
    for ids in by_class:
        rng.shuffle(ids)
        for j, post_id in enumerate(ids):
            fold_of[post_id] = (j + offset) % k
        offset = (offset + len(ids)) % k
    return FoldAssignment(k, fold_of)


def fold_split(dataset: Dataset, assignment: FoldAssignment, fold: int) -> tuple[Dataset, Dataset]:
    """Partition a dataset into (rest, fold) preserving item order."""
    in_fold = []
    rest = []
    for item in dataset.items:
        if assignment.fold_of[as_post(item).id] == fold:
            in_fold.append(item)
        else:
            rest.append(item)
    return Dataset(dataset.schema, tuple(rest)), Dataset(dataset.schema, tuple(in_fold))
