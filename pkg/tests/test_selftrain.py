"""Iterative pseudo-labeling: stratified confidence sampling and the acquisition loop."""

from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semilabel.backends import Backend, BuiltinBackend
from semilabel.corpus import DEFAULT_SCHEMA, ORIGIN_PSEUDO, Dataset, LabeledPost
from semilabel.errors import BackendError, DataError
from semilabel.selftrain import SelfTrainConfig, scs_select, self_train, write_trace

from oracles import oracle_scs


def random_instance(rng, n, num_classes):
    raw = rng.random((n, num_classes))
    probs = raw / raw.sum(axis=1, keepdims=True)
    ids = [f"p{i:04d}" for i in range(n)]
    return probs, ids


class TestStratifiedConfidenceSampling:
    def test_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            n = int(rng.integers(1, 60))
            num_classes = int(rng.integers(2, 6))
            fraction = float(rng.uniform(0.05, 1.0))
            probs, ids = random_instance(rng, n, num_classes)
            result = scs_select(probs, ids, fraction, num_classes)
            expected, counts = oracle_scs(probs.tolist(), ids, fraction)
            got = {a.id: (a.label, a.confidence) for a in result.selected}
            assert set(got) == set(expected)
            for post_id, (label, conf) in expected.items():
                assert got[post_id][0] == label
                assert got[post_id][1] == pytest.approx(conf, rel=1e-12)
            assert result.per_class_counts == counts

    def test_argmax_tie_goes_to_lowest_class(self):
        probs = np.array([[0.4, 0.4, 0.2, 0.0]])
        result = scs_select(probs, ["only"], 1.0, 4)
        assert result.selected[0].label == 0

    def test_full_fraction_takes_everything(self):
        rng = np.random.default_rng(3)
        probs, ids = random_instance(rng, 40, 4)
        result = scs_select(probs, ids, 1.0, 4)
        assert len(result.selected) == 40
        assert sum(result.per_class_counts) == 40

    def test_takes_floor_of_group_sizes(self):
        # 5 posts predicted class 0, 2 predicted class 1; p=0.5 -> floor(2.5)=2, floor(1)=1
        probs = np.array(
            [[0.9, 0.1], [0.8, 0.2], [0.7, 0.3], [0.6, 0.4], [0.55, 0.45],
             [0.2, 0.8], [0.3, 0.7]]
        )
        ids = [f"x{i}" for i in range(7)]
        result = scs_select(probs, ids, 0.5, 2)
        assert result.per_class_counts == (2, 1)
        chosen = {a.id for a in result.selected}
        # the most confident members of each group win
        assert chosen == {"x0", "x1", "x5"}

    def test_confidence_tie_broken_by_id(self):
        probs = np.array([[0.6, 0.4], [0.6, 0.4], [0.6, 0.4], [0.6, 0.4]])
        result = scs_select(probs, ["d", "b", "c", "a"], 0.5, 2)
        assert sorted(a.id for a in result.selected) == ["a", "b"]

    @pytest.mark.parametrize("fraction", [0.0, -0.5, 1.5])
    def test_bad_fraction_rejected(self, fraction):
        probs = np.array([[1.0, 0.0]])
        with pytest.raises(DataError):
            scs_select(probs, ["a"], fraction, 2)

    def test_mismatched_ids_rejected(self):
        with pytest.raises(DataError):
            scs_select(np.array([[1.0, 0.0]]), ["a", "b"], 0.5, 2)

    def test_duplicate_ids_rejected(self):
        with pytest.raises(DataError):
            scs_select(np.array([[1.0, 0.0], [0.0, 1.0]]), ["a", "a"], 0.5, 2)

    @given(
        seed=st.integers(min_value=0, max_value=10_000),
        fraction=st.floats(min_value=0.01, max_value=1.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_selection_never_exceeds_fraction_per_group(self, seed, fraction):
        rng = np.random.default_rng(seed)
        probs, ids = random_instance(rng, 30, 3)
        result = scs_select(probs, ids, fraction, 3)
        groups = np.bincount(probs.argmax(axis=1), minlength=3)
        for cls, taken in enumerate(result.per_class_counts):
            assert taken <= fraction * groups[cls] + 1e-9


class FailingBackend(Backend):
    def train(self, train_set, valset):
        raise BackendError("deliberate failure")

    def predict_proba(self, posts):
        raise BackendError("deliberate failure")


class TestSelfTrain:
    def run(self, blob, **kwargs) -> tuple[Dataset, list]:
        config = SelfTrainConfig(**{"stop_threshold": 30, **kwargs})
        backend = BuiltinBackend(DEFAULT_SCHEMA.num_classes)
        return self_train(blob.labeled, blob.unlabeled, blob.heldout, backend, config)

    def test_labels_entire_pool_in_order(self, blob):
        labeled, records = self.run(blob)
        assert labeled.ids() == blob.unlabeled.ids()
        assert all(item.origin == ORIGIN_PSEUDO for item in labeled.items)
        assert all(0.0 <= item.confidence <= 1.0 for item in labeled.items)
        assert records, "expected at least one acquisition round"

    def test_iteration_accounting(self, blob):
        _, records = self.run(blob)
        pool_size = len(blob.unlabeled.items)
        previous = pool_size
        for i, rec in enumerate(records):
            assert rec.iteration == i + 1
            assert previous >= 30, "loop body ran although the pool was below the threshold"
            assert rec.remaining == previous - sum(rec.acquired_per_class)
            assert rec.remaining < previous, "acquisitions must shrink the pool"
            assert 0.0 <= rec.val_accuracy <= 1.0
            previous = rec.remaining
        assert previous < 30 or len(records) == SelfTrainConfig().max_iterations

    def test_stop_threshold_above_pool_skips_loop(self, blob):
        labeled, records = self.run(blob, stop_threshold=10_000)
        assert records == []
        assert labeled.ids() == blob.unlabeled.ids()
        assert labeled.fully_labeled

    def test_max_iterations_caps_rounds(self, blob):
        _, records = self.run(blob, max_iterations=2)
        assert len(records) <= 2

    def test_vanishing_rate_exits_without_acquisitions(self, blob):
        labeled, records = self.run(blob, acquisition_rate=0.001)
        assert records == []
        assert labeled.fully_labeled

    def test_missing_class_in_seed_data_rejected(self, blob):
        trimmed = Dataset(
            blob.labeled.schema,
            tuple(item for item in blob.labeled.items if item.label != 3),
        )
        with pytest.raises(DataError, match="Attempt"):
            self_train(trimmed, blob.unlabeled, blob.heldout, BuiltinBackend(4))

    def test_pool_overlap_rejected(self, blob):
        overlapping = Dataset(
            blob.labeled.schema,
            blob.labeled.items + (LabeledPost(blob.unlabeled.posts[0], 0),),
        )
        with pytest.raises(DataError, match="pool"):
            self_train(overlapping, blob.unlabeled, blob.heldout, BuiltinBackend(4))

    def test_pseudo_labeled_validation_rejected(self, blob):
        fake_val = Dataset(
            blob.heldout.schema,
            tuple(
                LabeledPost(item.post, item.label, ORIGIN_PSEUDO, 0.5)
                for item in blob.heldout.items
            ),
        )
        backend = BuiltinBackend(4)
        with pytest.raises(DataError, match="ground-truth"):
            self_train(blob.labeled, blob.unlabeled, fake_val, backend)

    def test_backend_failure_names_iteration(self, blob):
        with pytest.raises(BackendError, match="iteration 1"):
            self_train(
                blob.labeled, blob.unlabeled, blob.heldout, FailingBackend(),
                SelfTrainConfig(stop_threshold=30),
            )

    def test_write_trace_round_trips(self, blob, tmp_path):
        _, records = self.run(blob)
        path = tmp_path / "trace.jsonl"
        write_trace(path, records)
        lines = [json.loads(line) for line in path.read_text().splitlines()]
        assert len(lines) == len(records)
        for line, rec in zip(lines, records):
            assert line["iter"] == rec.iteration
            assert line["remaining"] == rec.remaining
            assert line["acquired"] == list(rec.acquired_per_class)
            assert line["val_accuracy"] == pytest.approx(rec.val_accuracy)
