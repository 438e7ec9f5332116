"""Confusion matrices, per-class reports, cross-validation, and report files."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semilabel.backends import BuiltinBackend
from semilabel.classifier import ClassifierConfig
from semilabel.corpus import DEFAULT_SCHEMA, Dataset, LabeledPost, ORIGIN_PSEUDO
from semilabel.errors import DataError
from semilabel.evaluation import (
    confusion,
    cross_validate,
    format_table,
    report,
    threshold_select,
    write_report,
)

from oracles import oracle_class_metrics


class TestConfusion:
    def test_counts_cells(self):
        cm = confusion([0, 0, 1, 2], [0, 1, 1, 2], 4)
        expected = np.zeros((4, 4), dtype=np.int64)
        expected[0, 0] = expected[0, 1] = expected[1, 1] = expected[2, 2] = 1
        np.testing.assert_array_equal(cm, expected)

    def test_rejects_out_of_range(self):
        with pytest.raises(DataError):
            confusion([0, 4], [0, 0], 4)
        with pytest.raises(DataError):
            confusion([0, 0], [0, -1], 4)

    def test_rejects_length_mismatch(self):
        with pytest.raises(DataError):
            confusion([0, 1], [0], 4)


class TestReport:
    def test_worked_example(self):
        rep = report(confusion([0, 0, 1, 2], [0, 1, 1, 2], 4))
        assert rep.micro_f1 == 0.75
        assert rep.f1[0] == pytest.approx(2 / 3, abs=1e-12)
        assert rep.f1[1] == pytest.approx(2 / 3, abs=1e-12)
        assert rep.f1[2] == 1.0
        assert rep.f1[3] == 0.0
        assert rep.macro_f1 == pytest.approx((2 / 3 + 2 / 3 + 1.0) / 4, abs=1e-12)
        assert rep.weighted_f1 == 0.75
        assert rep.support == (2, 1, 1, 0)

    def test_micro_equals_accuracy_on_random_labelings(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(1, 50))
            k = int(rng.integers(2, 6))
            y_true = rng.integers(0, k, size=n)
            y_pred = rng.integers(0, k, size=n)
            rep = report(confusion(y_true, y_pred, k))
            assert rep.micro_f1 == pytest.approx(float(np.mean(y_true == y_pred)), abs=1e-12)

    def test_matches_oracle_on_random_labelings(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(1, 60))
            k = int(rng.integers(2, 6))
            y_true = rng.integers(0, k, size=n).tolist()
            y_pred = rng.integers(0, k, size=n).tolist()
            rep = report(confusion(y_true, y_pred, k))
            want = oracle_class_metrics(y_true, y_pred, k)
            np.testing.assert_allclose(rep.precision, want["precision"], atol=1e-12)
            np.testing.assert_allclose(rep.recall, want["recall"], atol=1e-12)
            np.testing.assert_allclose(rep.f1, want["f1"], atol=1e-12)
            assert rep.macro_f1 == pytest.approx(want["macro_f1"], abs=1e-12)
            assert rep.weighted_f1 == pytest.approx(want["weighted_f1"], abs=1e-12)

    def test_absent_class_scores_zero_but_counts_in_macro(self):
        rep = report(confusion([0, 0, 1], [0, 0, 1], 3))
        assert rep.f1[2] == 0.0
        assert rep.macro_f1 == pytest.approx(2 / 3, abs=1e-12)

    def test_empty_matrix_rejected(self):
        with pytest.raises(DataError):
            report(np.zeros((4, 4), dtype=np.int64))

    @given(
        labels=st.lists(
            st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=40
        )
    )
    @settings(max_examples=100, deadline=None)
    def test_metrics_bounded(self, labels):
        y_true = [a for a, _ in labels]
        y_pred = [b for _, b in labels]
        rep = report(confusion(y_true, y_pred, 4))
        for series in (rep.precision, rep.recall, rep.f1):
            assert all(0.0 <= v <= 1.0 for v in series)
        assert 0.0 <= rep.macro_f1 <= 1.0
        assert 0.0 <= rep.weighted_f1 <= 1.0


class TestThresholdSelect:
    def test_strictly_above_threshold(self):
        probs = np.array([[0.7, 0.3], [0.8, 0.2], [0.5, 0.5], [0.2, 0.8]])
        result = threshold_select(probs, ["a", "b", "c", "d"], 0.7)
        chosen = {(a.id, a.label) for a in result.selected}
        assert chosen == {("b", 0), ("d", 1)}
        assert result.per_class_counts == (1, 1)

    @pytest.mark.parametrize("threshold", [0.0, 1.0, -0.2, 1.5])
    def test_threshold_bounds_exclusive(self, threshold):
        with pytest.raises(DataError):
            threshold_select(np.array([[1.0, 0.0]]), ["a"], threshold)


def make_factory():
    def factory(seed: int) -> BuiltinBackend:
        config = ClassifierConfig(num_classes=4, seed=seed, epochs=10)
        return BuiltinBackend(4, classifier_config=config)

    return factory


class TestCrossValidate:
    def test_reports_per_fold_and_aggregates(self, blob):
        cv = cross_validate(blob.labeled, None, make_factory(), k=5, base_seed=1)
        assert len(cv.folds) == 5
        micro = [fold.micro_f1 for fold in cv.folds]
        assert cv.mean.micro_f1 == pytest.approx(float(np.mean(micro)), abs=1e-12)
        # population standard deviation: divide by k, not k - 1
        assert cv.std.micro_f1 == pytest.approx(float(np.std(micro)), abs=1e-12)
        assert cv.mean.micro_f1 > 0.6

    def test_deterministic(self, blob):
        a = cross_validate(blob.labeled, None, make_factory(), k=5, base_seed=3)
        b = cross_validate(blob.labeled, None, make_factory(), k=5, base_seed=3)
        assert a == b

    def test_parallel_matches_serial(self, blob):
        a = cross_validate(blob.labeled, None, make_factory(), k=5, base_seed=3)
        b = cross_validate(blob.labeled, None, make_factory(), k=5, base_seed=3, parallel=3)
        assert a == b

    def test_extra_training_data_changes_models(self, blob):
        extra = Dataset(
            blob.labeled.schema,
            tuple(
                LabeledPost(post, blob.truth[post.id], ORIGIN_PSEUDO, 0.9)
                for post in blob.unlabeled.posts
            ),
        )
        plain = cross_validate(blob.labeled, None, make_factory(), k=5, base_seed=0)
        boosted = cross_validate(blob.labeled, extra, make_factory(), k=5, base_seed=0)
        assert boosted != plain

    def test_pseudo_labeled_eval_set_rejected(self, blob):
        pseudo = Dataset(
            blob.labeled.schema,
            tuple(
                LabeledPost(item.post, item.label, ORIGIN_PSEUDO, 0.5)
                for item in blob.labeled.items
            ),
        )
        with pytest.raises(DataError):
            cross_validate(pseudo, None, make_factory(), k=5)

    def test_extra_id_collision_rejected(self, blob):
        with pytest.raises(DataError):
            cross_validate(blob.labeled, blob.labeled, make_factory(), k=5)


class TestReportFiles:
    def run_cv(self, blob):
        return cross_validate(blob.labeled, None, make_factory(), k=5, base_seed=2)

    def test_table_mentions_all_classes(self, blob):
        table = format_table(self.run_cv(blob), DEFAULT_SCHEMA.names)
        for name in DEFAULT_SCHEMA.names:
            assert name in table
        assert "macro" in table and "micro" in table and "weighted" in table
        assert "(" in table  # mean (std) cells

    def test_write_report_is_sorted_and_stable(self, blob, tmp_path):
        cv = self.run_cv(blob)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        write_report(a, cv)
        write_report(b, cv)
        assert a.read_bytes() == b.read_bytes()
        payload = json.loads(a.read_text())
        assert list(payload) == sorted(payload)
        assert a.read_text().endswith("\n")
        assert payload["mean"]["micro_f1"] == pytest.approx(cv.mean.micro_f1)
