"""Disagreement triage: queue non-unanimous pseudo-labels, assign annotators with a
shared overlap block, record verdicts append-only, and fold corrections back in.

A review store is a directory holding two files: an immutable `queue.jsonl`
(header record, then one record per queued item) and an append-only
`annotations.jsonl` replayed on open. Latest timestamp wins per (item, annotator);
equal timestamps resolve to the later log entry.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Sequence

from .corpus import (
    ORIGIN_CORRECTED,
    Dataset,
    LabeledPost,
    LabelSchema,
    Post,
    as_post,
    make_schema,
)
from .ensemble import ConsensusLabel, VoteMatrix
from .errors import DataError
from .ioutil import dump_jsonl, read_jsonl

VERDICT_CORRECT = "correct"
VERDICT_INCORRECT = "incorrect"

STATUS_PENDING = "pending"
STATUS_DONE = "done"


class UnknownItemError(DataError):
    """Annotation references an item that is not in the queue."""


class NotAssignedError(DataError):
    """Annotator is not among the item's assignees."""


@dataclass(frozen=True)
class ReviewItem:
    post: Post
    consensus: ConsensusLabel
    votes: tuple[int, ...]
    confidences: tuple[float, ...]
    assignees: tuple[str, ...] = ()


@dataclass(frozen=True)
class Annotation:
    item_id: str
    annotator: str
    verdict: str
    corrected_label: int | None
    ts: str


@dataclass(frozen=True)
class AgreementReport:
    shared_items: int
    agreement_rate: float
    per_annotator_counts: dict[str, int]


@dataclass(frozen=True)
class CorrectionSummary:
    total: int  # queued items
    resolved: int  # effective verdict established
    correct: int
    corrected: int
    conflicts: int
    unresolved: int
    accuracy: float | None  # correct / resolved


def build_queue(consensus: Sequence[ConsensusLabel], matrix: VoteMatrix) -> list[ReviewItem]:
    """Exactly the items whose vote was not unanimous, most contested first."""
    by_id = {rec.id: rec for rec in matrix.records}
    queue = []
    for cons in consensus:
        rec = by_id.get(cons.id)
        if rec is None:
            raise DataError(f"consensus item {cons.id!r} missing from vote matrix")
        if cons.unanimity < matrix.num_runs:
            queue.append(
                ReviewItem(
                    post=Post(rec.id, rec.text, rec.features),
                    consensus=cons,
                    votes=rec.votes,
                    confidences=rec.confidences,
                )
            )
    queue.sort(key=lambda item: (item.consensus.unanimity, item.post.id))
    return queue


def assign(
    queue: Sequence[ReviewItem], annotators: Sequence[str], overlap_n: int
) -> dict[str, tuple[str, ...]]:
    """First overlap_n queue items go to every annotator; the rest is split into
    contiguous, as-even-as-possible blocks in queue order."""
    if len(annotators) < 1:
        raise DataError("need at least one annotator")
    if len(set(annotators)) != len(annotators):
        raise DataError("annotator ids must be unique")
    if not 0 <= overlap_n <= len(queue):
        raise DataError(f"overlap {overlap_n} outside [0, {len(queue)}]")
    assignment: dict[str, tuple[str, ...]] = {}
    everyone = tuple(annotators)
    for item in queue[:overlap_n]:
        assignment[item.post.id] = everyone
    rest = queue[overlap_n:]
    quotient, remainder = divmod(len(rest), len(annotators))
    start = 0
    for i, annotator in enumerate(annotators):
        size = quotient + (1 if i < remainder else 0)
        for item in rest[start : start + size]:
            assignment[item.post.id] = (annotator,)
        start += size
    return assignment


def _annotation_from_record(rec: Mapping[str, Any], where: str) -> Annotation:
    try:
        corrected = rec.get("corrected_label")
        return Annotation(
            item_id=str(rec["item_id"]),
            annotator=str(rec["annotator"]),
            verdict=str(rec["verdict"]),
            corrected_label=None if corrected is None else int(corrected),
            ts=str(rec["ts"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{where}bad annotation record: {exc}") from None


class ReviewStore:
    """Queue plus annotation log in one directory; safe for concurrent submitters."""

    QUEUE_FILE = "queue.jsonl"
    LOG_FILE = "annotations.jsonl"

    def __init__(
        self,
        directory: Path,
        schema: LabelSchema,
        num_runs: int,
        items: Sequence[ReviewItem],
    ) -> None:
        self.directory = directory
        self.schema = schema
        self.num_runs = num_runs
        self.items: tuple[ReviewItem, ...] = tuple(items)
        self._by_id = {item.post.id: item for item in self.items}
        # (item_id, annotator) -> effective annotation; later log entries win ties
        self._effective: dict[tuple[str, str], Annotation] = {}
        self._lock = threading.Lock()

    @classmethod
    def create(
        cls,
        directory: str | Path,
        queue: Sequence[ReviewItem],
        assignments: Mapping[str, Sequence[str]],
        schema: LabelSchema,
        num_runs: int,
    ) -> "ReviewStore":
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        queue_path = directory / cls.QUEUE_FILE
        if queue_path.exists():
            raise DataError(f"refusing to overwrite existing queue {queue_path}")
        items = []
        for item in queue:
            assignees = assignments.get(item.post.id)
            if not assignees:
                raise DataError(f"queued item {item.post.id!r} has no assignees")
            items.append(
                ReviewItem(item.post, item.consensus, item.votes, item.confidences, tuple(assignees))
            )
        header = {
            "type": "review-queue",
            "schema": list(schema.names),
            "num_runs": num_runs,
        }
        rows: list[dict[str, Any]] = [header]
        for item in items:
            row: dict[str, Any] = {
                "id": item.post.id,
                "text": item.post.text,
                "label": item.consensus.label,
                "unanimity": item.consensus.unanimity,
                "tie_broken": item.consensus.tie_broken,
                "votes": list(item.votes),
                "confidences": list(item.confidences),
                "assignees": list(item.assignees),
            }
            if item.post.features is not None:
                row["features"] = list(item.post.features)
            rows.append(row)
        queue_path.write_text(dump_jsonl(rows), encoding="utf-8")
        (directory / cls.LOG_FILE).touch()
        return cls(directory, schema, num_runs, items)

    @classmethod
    def open(cls, directory: str | Path) -> "ReviewStore":
        directory = Path(directory)
        queue_path = directory / cls.QUEUE_FILE
        rows = read_jsonl(queue_path)
        if not rows:
            raise DataError(f"{queue_path}: empty queue file")
        _, header = rows[0]
        if header.get("type") != "review-queue":
            raise DataError(f"{queue_path}: first record must be the queue header")
        schema = make_schema([str(n) for n in header["schema"]])
        num_runs = int(header["num_runs"])
        items = []
        for lineno, rec in rows[1:]:
            where = f"{queue_path}: line {lineno}: "
            try:
                features = rec.get("features")
                items.append(
                    ReviewItem(
                        post=Post(
                            str(rec["id"]),
                            str(rec["text"]),
                            None if features is None else tuple(float(v) for v in features),
                        ),
                        consensus=ConsensusLabel(
                            str(rec["id"]),
                            int(rec["label"]),
                            int(rec["unanimity"]),
                            bool(rec["tie_broken"]),
                        ),
                        votes=tuple(int(v) for v in rec["votes"]),
                        confidences=tuple(float(c) for c in rec["confidences"]),
                        assignees=tuple(str(a) for a in rec["assignees"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{where}bad queue record: {exc}") from None
        store = cls(directory, schema, num_runs, items)
        log_path = directory / cls.LOG_FILE
        if log_path.exists():
            for lineno, rec in read_jsonl(log_path):
                ann = _annotation_from_record(rec, f"{log_path}: line {lineno}: ")
                store._absorb(ann)
        return store

    def _absorb(self, annotation: Annotation) -> None:
        key = (annotation.item_id, annotation.annotator)
        current = self._effective.get(key)
        if current is None or annotation.ts >= current.ts:
            self._effective[key] = annotation

    def _validate(self, annotation: Annotation) -> ReviewItem:
        item = self._by_id.get(annotation.item_id)
        if item is None:
            raise UnknownItemError(f"unknown item {annotation.item_id!r}")
        if annotation.annotator not in item.assignees:
            raise NotAssignedError(
                f"{annotation.annotator!r} is not assigned to item {annotation.item_id!r}"
            )
        if annotation.verdict not in (VERDICT_CORRECT, VERDICT_INCORRECT):
            raise DataError(f"verdict must be correct or incorrect, got {annotation.verdict!r}")
        if annotation.verdict == VERDICT_INCORRECT:
            if annotation.corrected_label is None:
                raise DataError("verdict incorrect requires corrected_label")
            if not 0 <= annotation.corrected_label < self.schema.num_classes:
                raise DataError(f"corrected_label {annotation.corrected_label} out of range")
            if annotation.corrected_label == item.consensus.label:
                raise DataError("corrected_label must differ from the consensus label")
        elif annotation.corrected_label is not None:
            raise DataError("verdict correct must not carry corrected_label")
        return item

    def submit(
        self,
        item_id: str,
        annotator: str,
        verdict: str,
        corrected_label: int | None = None,
        ts: str | None = None,
    ) -> str:
        """Validate, append to the log, update state; returns the item's new status."""
        if ts is None:
            ts = datetime.now(timezone.utc).isoformat()
        annotation = Annotation(item_id, annotator, verdict, corrected_label, ts)
        with self._lock:
            self._validate(annotation)
            rec: dict[str, Any] = {
                "item_id": item_id,
                "annotator": annotator,
                "verdict": verdict,
                "ts": ts,
            }
            if corrected_label is not None:
                rec["corrected_label"] = corrected_label
            with (self.directory / self.LOG_FILE).open("a", encoding="utf-8") as fh:
                fh.write(dump_jsonl([rec]))
            self._absorb(annotation)
            return self.status_of(item_id)

    def annotations_for(self, item_id: str) -> dict[str, Annotation]:
        item = self._by_id.get(item_id)
        if item is None:
            raise UnknownItemError(f"unknown item {item_id!r}")
        out = {}
        for annotator in item.assignees:
            ann = self._effective.get((item_id, annotator))
            if ann is not None:
                out[annotator] = ann
        return out

    def status_of(self, item_id: str) -> str:
        item = self._by_id.get(item_id)
        if item is None:
            raise UnknownItemError(f"unknown item {item_id!r}")
        done = all((item_id, a) in self._effective for a in item.assignees)
        return STATUS_DONE if done else STATUS_PENDING

    def item(self, item_id: str) -> ReviewItem:
        item = self._by_id.get(item_id)
        if item is None:
            raise UnknownItemError(f"unknown item {item_id!r}")
        return item

    def pending_for(self, annotator: str) -> list[ReviewItem]:
        """Items assigned to this annotator that they have not yet annotated, queue order."""
        return [
            item
            for item in self.items
            if annotator in item.assignees and (item.post.id, annotator) not in self._effective
        ]

    def _shared_done(self) -> list[ReviewItem]:
        return [
            item
            for item in self.items
            if len(item.assignees) > 1 and self.status_of(item.post.id) == STATUS_DONE
        ]

    def conflicts(self) -> list[ReviewItem]:
        """Fully-annotated shared items whose annotators disagree."""
        return [
            item
            for item in self._shared_done()
            if not _verdicts_agree(list(self.annotations_for(item.post.id).values()))
        ]

    def percent_agreement(self) -> AgreementReport:
        shared = self._shared_done()
        if not shared:
            raise DataError("no fully-annotated shared items to compare")
        agreements = sum(
            _verdicts_agree(list(self.annotations_for(item.post.id).values())) for item in shared
        )
        per_annotator: dict[str, int] = {}
        for item_id, annotator in self._effective:
            per_annotator[annotator] = per_annotator.get(annotator, 0) + 1
        return AgreementReport(
            shared_items=len(shared),
            agreement_rate=agreements / len(shared),
            per_annotator_counts=per_annotator,
        )

    def stats(self) -> dict[str, Any]:
        done = sum(self.status_of(item.post.id) == STATUS_DONE for item in self.items)
        per_annotator: dict[str, int] = {}
        for _, annotator in self._effective:
            per_annotator[annotator] = per_annotator.get(annotator, 0) + 1
        out: dict[str, Any] = {
            "total": len(self.items),
            "done": done,
            "pending": len(self.items) - done,
            "per_annotator": per_annotator,
        }
        try:
            out["agreement_rate"] = self.percent_agreement().agreement_rate
        except DataError:
            pass
        return out


def _verdicts_agree(annotations: Sequence[Annotation]) -> bool:
    """Identical verdicts; corrections must also name the same replacement label."""
    verdicts = {a.verdict for a in annotations}
    if len(verdicts) != 1:
        return False
    if verdicts == {VERDICT_INCORRECT}:
        return len({a.corrected_label for a in annotations}) == 1
    return True


def apply_corrections(dataset: Dataset, store: ReviewStore) -> tuple[Dataset, CorrectionSummary]:
    """Replace pseudo-labels that reviewers marked incorrect; leave everything else.

    An item is resolved once every assignee has annotated it and, for shared items,
    the verdicts agree. Conflicted items stay uncorrected until a resubmission
    settles them.
    """
    ids = set(dataset.ids())
    missing = [item.post.id for item in store.items if item.post.id not in ids]
    if missing:
        raise DataError(f"queued items missing from dataset: {missing[:5]}")
    if store.schema != dataset.schema:
        raise DataError("review store and dataset schemas differ")

    resolved = correct = corrected = conflicts = 0
    replacement: dict[str, int] = {}
    for item in store.items:
        item_id = item.post.id
        if store.status_of(item_id) != STATUS_DONE:
            continue
        annotations = list(store.annotations_for(item_id).values())
        if not _verdicts_agree(annotations):
            conflicts += 1
            continue
        resolved += 1
        if annotations[0].verdict == VERDICT_CORRECT:
            correct += 1
        else:
            corrected += 1
            replacement[item_id] = annotations[0].corrected_label  # type: ignore[assignment]

    items: list[Post | LabeledPost] = []
    for entry in dataset.items:
        post = as_post(entry)
        if post.id in replacement:
            items.append(LabeledPost(post, replacement[post.id], ORIGIN_CORRECTED, None))
        else:
            items.append(entry)
    summary = CorrectionSummary(
        total=len(store.items),
        resolved=resolved,
        correct=correct,
        corrected=corrected,
        conflicts=conflicts,
        unresolved=len(store.items) - resolved - conflicts,
        accuracy=(correct / resolved) if resolved else None,
    )
    return Dataset(dataset.schema, tuple(items)), summary
