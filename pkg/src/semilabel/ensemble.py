"""Ensembled pseudo-labeling: repeated self-training with rotating validation folds,
majority voting with unanimity scores, and agreement statistics."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

from .backends import Backend
from .corpus import (
    ORIGIN_PSEUDO,
    Dataset,
    LabeledPost,
    LabelSchema,
    Post,
    fold_split,
    make_schema,
    stratified_kfold,
)
from .errors import BackendError, DataError
from .ioutil import atomic_write_jsonl, read_jsonl
from .selftrain import IterationRecord, SelfTrainConfig, self_train


@dataclass(frozen=True)
class VoteRecord:
    """One unlabeled post with its per-run pseudo-labels and confidences."""

    id: str
    text: str
    votes: tuple[int, ...]
    confidences: tuple[float, ...]
    features: tuple[float, ...] | None = None


@dataclass(frozen=True)
class VoteMatrix:
    schema: LabelSchema
    num_runs: int
    records: tuple[VoteRecord, ...]

    def __post_init__(self) -> None:
        if self.num_runs < 1:
            raise DataError(f"num_runs must be positive, got {self.num_runs}")
        seen: set[str] = set()
        for rec in self.records:
            if rec.id in seen:
                raise DataError(f"duplicate id {rec.id!r} in vote matrix")
            seen.add(rec.id)
            if len(rec.votes) != self.num_runs or len(rec.confidences) != self.num_runs:
                raise DataError(
                    f"post {rec.id!r} has {len(rec.votes)} votes / "
                    f"{len(rec.confidences)} confidences, expected {self.num_runs}"
                )
            for v in rec.votes:
                if not 0 <= v < self.schema.num_classes:
                    raise DataError(f"post {rec.id!r} vote {v} out of range")
            if any(not 0.0 <= c <= 1.0 for c in rec.confidences):
                raise DataError(f"post {rec.id!r} has a confidence outside [0, 1]")

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class ConsensusLabel:
    id: str
    label: int
    unanimity: int  # votes agreeing with the consensus label
    tie_broken: bool


def majority_vote(
    votes: Sequence[int], confidences: Sequence[float], num_classes: int, item_id: str = ""
) -> ConsensusLabel:
    """Most frequent vote; count ties go to the class with the larger summed
    confidence, then to the lower class index."""
    if not votes:
        raise DataError(f"no votes for item {item_id!r}")
    if len(votes) != len(confidences):
        raise DataError(f"{len(votes)} votes but {len(confidences)} confidences")
    counts = [0] * num_classes
    conf_sums = [0.0] * num_classes
    for vote, conf in zip(votes, confidences):
        if not 0 <= vote < num_classes:
            raise DataError(f"vote {vote} out of range [0, {num_classes})")
        counts[vote] += 1
        conf_sums[vote] += conf
    top = max(counts)
    tied = [c for c in range(num_classes) if counts[c] == top]
    if len(tied) == 1:
        return ConsensusLabel(item_id, tied[0], top, False)
    best = max(conf_sums[c] for c in tied)
    label = next(c for c in tied if conf_sums[c] == best)
    return ConsensusLabel(item_id, label, top, True)


def consensus_for(matrix: VoteMatrix) -> tuple[ConsensusLabel, ...]:
    return tuple(
        majority_vote(rec.votes, rec.confidences, matrix.schema.num_classes, rec.id)
        for rec in matrix.records
    )


def run_ensemble(
    labeled: Dataset,
    unlabeled: Dataset,
    backend_factory: Callable[[int], Backend],
    k_runs: int = 5,
    config: SelfTrainConfig = SelfTrainConfig(),
    base_seed: int = 0,
    parallel: int = 1,
) -> tuple[VoteMatrix, list[list[IterationRecord]]]:
    """Self-train k_runs times, run j validating on stratified fold j and training on
    the rest, with backend seed base_seed + j. Returns one vote per run per post.

    With k_runs=1 there is no fold to rotate; the single run trains and validates on
    the full labeled set.
    """
    if k_runs < 1:
        raise DataError(f"k_runs must be positive, got {k_runs}")
    if parallel < 1:
        raise DataError(f"parallel must be positive, got {parallel}")
    if labeled.schema != unlabeled.schema:
        raise DataError("labeled and unlabeled sets must share a schema")
    splits: list[tuple[Dataset, Dataset]] = []
    if k_runs == 1:
        splits.append((labeled, labeled))
    else:
        folds = stratified_kfold(labeled, k_runs, base_seed)
        for j in range(k_runs):
            splits.append(fold_split(labeled, folds, j))

    def one_run(j: int) -> tuple[Dataset, list[IterationRecord]]:
        train_set, valset = splits[j]
        try:
            with backend_factory(base_seed + j) as backend:
                return self_train(train_set, unlabeled, valset, backend, config)
        except BackendError as exc:
            raise BackendError(f"run {j}: {exc}") from exc

    if parallel == 1 or k_runs == 1:
        results = [one_run(j) for j in range(k_runs)]
    else:
        with ThreadPoolExecutor(max_workers=min(parallel, k_runs)) as pool:
            futures = [pool.submit(one_run, j) for j in range(k_runs)]
            results = [f.result() for f in futures]

    records = []
    for i, post in enumerate(unlabeled.posts):
        run_items = [results[j][0].items[i] for j in range(k_runs)]
        records.append(
            VoteRecord(
                id=post.id,
                text=post.text,
                votes=tuple(item.label for item in run_items),  # type: ignore[union-attr]
                confidences=tuple(item.confidence for item in run_items),  # type: ignore[union-attr]
                features=post.features,
            )
        )
    matrix = VoteMatrix(labeled.schema, k_runs, tuple(records))
    return matrix, [trace for _, trace in results]


def consensus_dataset(matrix: VoteMatrix, consensus: Sequence[ConsensusLabel]) -> Dataset:
    """Materialize majority-vote labels as a pseudo-labeled training dataset."""
    if len(consensus) != len(matrix.records):
        raise DataError(f"{len(consensus)} consensus labels for {len(matrix.records)} posts")
    items = []
    for rec, cons in zip(matrix.records, consensus):
        if rec.id != cons.id:
            raise DataError(f"consensus order mismatch: {rec.id!r} vs {cons.id!r}")
        items.append(
            LabeledPost(Post(rec.id, rec.text, rec.features), cons.label, ORIGIN_PSEUDO, None)
        )
    return Dataset(matrix.schema, tuple(items))


def cohen_kappa(a: Sequence[int], b: Sequence[int]) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e); 1.0 in the degenerate case
    where both labelings are the same constant."""
    if len(a) != len(b):
        raise DataError(f"labelings differ in length: {len(a)} vs {len(b)}")
    n = len(a)
    if n == 0:
        raise DataError("cannot compute agreement on empty labelings")
    counts_a: dict[int, int] = {}
    counts_b: dict[int, int] = {}
    observed = 0
    for x, y in zip(a, b):
        counts_a[x] = counts_a.get(x, 0) + 1
        counts_b[y] = counts_b.get(y, 0) + 1
        observed += x == y
    expected_num = sum(cnt * counts_b.get(label, 0) for label, cnt in counts_a.items())
    if expected_num == n * n:  # both constant and equal; agreement is total
        return 1.0
    p_o = observed / n
    p_e = expected_num / (n * n)
    return (p_o - p_e) / (1 - p_e)


def kappa_per_run(matrix: VoteMatrix, consensus: Sequence[ConsensusLabel]) -> tuple[float, ...]:
    """Each run's agreement with the majority vote."""
    consensus_labels = [c.label for c in consensus]
    return tuple(
        cohen_kappa([rec.votes[j] for rec in matrix.records], consensus_labels)
        for j in range(matrix.num_runs)
    )


@dataclass(frozen=True)
class UnanimityHistogram:
    """Item counts per unanimity level (1..num_runs), overall and per consensus class."""

    num_runs: int
    num_classes: int
    level_counts: tuple[int, ...]  # index = unanimity level; index 0 unused
    level_class_counts: tuple[tuple[int, ...], ...]

    def as_dict(self) -> dict[str, Any]:
        return {
            "num_runs": self.num_runs,
            "num_classes": self.num_classes,
            "levels": {str(v): self.level_counts[v] for v in range(1, self.num_runs + 1)},
            "by_class": {
                str(v): list(self.level_class_counts[v]) for v in range(1, self.num_runs + 1)
            },
        }


def unanimity_histogram(
    consensus: Sequence[ConsensusLabel], num_runs: int, num_classes: int
) -> UnanimityHistogram:
    levels = [0] * (num_runs + 1)
    by_class = [[0] * num_classes for _ in range(num_runs + 1)]
    for c in consensus:
        if not 1 <= c.unanimity <= num_runs:
            raise DataError(f"item {c.id!r} unanimity {c.unanimity} out of range")
        levels[c.unanimity] += 1
        by_class[c.unanimity][c.label] += 1
    return UnanimityHistogram(
        num_runs, num_classes, tuple(levels), tuple(tuple(row) for row in by_class)
    )


def _vote_row(rec: VoteRecord) -> dict[str, Any]:
    row: dict[str, Any] = {
        "id": rec.id,
        "text": rec.text,
        "votes": list(rec.votes),
        "confidences": list(rec.confidences),
    }
    if rec.features is not None:
        row["features"] = list(rec.features)
    return row


def write_votes(path: str | Path, matrix: VoteMatrix) -> None:
    """Header record with schema and run count, then one record per post."""
    header = {"type": "votes", "schema": list(matrix.schema.names), "num_runs": matrix.num_runs}
    atomic_write_jsonl(path, [header] + [_vote_row(rec) for rec in matrix.records])


def _parse_vote_rows(
    path: str | Path, expected_type: str
) -> tuple[LabelSchema, int, list[tuple[int, dict[str, Any]]]]:
    rows = read_jsonl(path)
    if not rows:
        raise DataError(f"{path}: no votes")
    _, header = rows[0]
    if header.get("type") != expected_type:
        raise DataError(f"{path}: first record must be a {expected_type!r} header")
    schema = make_schema([str(n) for n in header["schema"]])
    num_runs = int(header["num_runs"])
    return schema, num_runs, rows[1:]


def _record_from_row(rec: dict[str, Any], where: str) -> VoteRecord:
    try:
        features = rec.get("features")
        return VoteRecord(
            id=str(rec["id"]),
            text=str(rec.get("text", "")),
            votes=tuple(int(v) for v in rec["votes"]),
            confidences=tuple(float(c) for c in rec["confidences"]),
            features=None if features is None else tuple(float(v) for v in features),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{where}bad vote record: {exc}") from None


def read_votes(path: str | Path) -> VoteMatrix:
    schema, num_runs, rows = _parse_vote_rows(path, "votes")
    if not rows:
        raise DataError(f"{path}: no votes")
    records = [_record_from_row(rec, f"{path}: line {lineno}: ") for lineno, rec in rows]
    return VoteMatrix(schema, num_runs, tuple(records))


def write_consensus(
    path: str | Path, matrix: VoteMatrix, consensus: Sequence[ConsensusLabel]
) -> None:
    """Votes plus the majority-vote outcome per post, in matrix order."""
    if len(consensus) != len(matrix.records):
        raise DataError(f"{len(consensus)} consensus labels for {len(matrix.records)} posts")
    header = {
        "type": "consensus",
        "schema": list(matrix.schema.names),
        "num_runs": matrix.num_runs,
    }
    rows = [header]
    for rec, cons in zip(matrix.records, consensus):
        if rec.id != cons.id:
            raise DataError(f"consensus order mismatch: {rec.id!r} vs {cons.id!r}")
        row = _vote_row(rec)
        row.update(label=cons.label, unanimity=cons.unanimity, tie_broken=cons.tie_broken)
        rows.append(row)
    atomic_write_jsonl(path, rows)


def read_consensus(path: str | Path) -> tuple[VoteMatrix, tuple[ConsensusLabel, ...]]:
    schema, num_runs, rows = _parse_vote_rows(path, "consensus")
    if not rows:
        raise DataError(f"{path}: no consensus records")
    records = []
    consensus = []
    for lineno, rec in rows:
        where = f"{path}: line {lineno}: "
        records.append(_record_from_row(rec, where))
        try:
            consensus.append(
                ConsensusLabel(
                    id=str(rec["id"]),
                    label=int(rec["label"]),
                    unanimity=int(rec["unanimity"]),
                    tie_broken=bool(rec["tie_broken"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{where}bad consensus record: {exc}") from None
    matrix = VoteMatrix(schema, num_runs, tuple(records))
    for cons in consensus:
        if not 0 <= cons.label < schema.num_classes:
            raise DataError(f"consensus label {cons.label} of {cons.id!r} out of range")
    return matrix, tuple(consensus)
