"""Vote aggregation across self-training runs, agreement statistics, and persistence."""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semilabel.backends import BuiltinBackend
from semilabel.classifier import ClassifierConfig
from semilabel.corpus import DEFAULT_SCHEMA, ORIGIN_PSEUDO
from semilabel.ensemble import (
    ConsensusLabel,
    VoteMatrix,
    VoteRecord,
    cohen_kappa,
    consensus_dataset,
    consensus_for,
    kappa_per_run,
    majority_vote,
    read_consensus,
    read_votes,
    run_ensemble,
    unanimity_histogram,
    write_consensus,
    write_votes,
)
from semilabel.errors import DataError
from semilabel.selftrain import SelfTrainConfig

from oracles import oracle_kappa, oracle_majority


class TestMajorityVote:
    def test_exhaustive_three_votes_match_oracle(self):
        rng = np.random.default_rng(8)
        for votes in itertools.product(range(4), repeat=3):
            confidences = rng.uniform(0.5, 1.0, size=3).tolist()
            got = majority_vote(votes, confidences, 4)
            label, unanimity, tied = oracle_majority(votes, confidences, 4)
            assert (got.label, got.unanimity, got.tie_broken) == (label, unanimity, tied)

    def test_clear_majority(self):
        got = majority_vote([2, 2, 2, 1, 0], [0.9] * 5, 4)
        assert (got.label, got.unanimity, got.tie_broken) == (2, 3, False)

    def test_count_tie_broken_by_summed_confidence(self):
        # two votes each for classes 0 and 1; class 1 is more confident overall
        got = majority_vote([0, 0, 1, 1, 2], [0.6, 0.6, 0.9, 0.8, 0.99], 4)
        assert (got.label, got.unanimity, got.tie_broken) == (1, 2, True)

    def test_confidence_tie_falls_back_to_lower_class(self):
        got = majority_vote([3, 1, 3, 1], [0.7, 0.7, 0.7, 0.7], 4)
        assert (got.label, got.tie_broken) == (1, True)

    def test_unanimous_vote(self):
        got = majority_vote([1] * 5, [0.5] * 5, 4)
        assert (got.label, got.unanimity, got.tie_broken) == (1, 5, False)

    def test_no_votes_rejected(self):
        with pytest.raises(DataError):
            majority_vote([], [], 4)

    def test_out_of_range_vote_rejected(self):
        with pytest.raises(DataError):
            majority_vote([0, 4], [0.5, 0.5], 4)


def make_matrix(rows, num_runs=5) -> VoteMatrix:
    records = tuple(
        VoteRecord(
            id=f"i{n:03d}",
            text=f"post {n}",
            votes=tuple(votes),
            confidences=tuple(confs),
            features=None,
        )
        for n, (votes, confs) in enumerate(rows)
    )
    return VoteMatrix(DEFAULT_SCHEMA, num_runs, records)


class TestVoteMatrix:
    def test_vote_length_must_match_runs(self):
        with pytest.raises(DataError):
            make_matrix([([0, 1], [0.5, 0.5])], num_runs=5)

    def test_confidence_range_checked(self):
        with pytest.raises(DataError):
            make_matrix([([0] * 5, [0.5, 0.5, 0.5, 0.5, 1.5])])

    def test_duplicate_ids_rejected(self):
        records = (
            VoteRecord("a", "", (0,) * 5, (0.5,) * 5, None),
            VoteRecord("a", "", (1,) * 5, (0.5,) * 5, None),
        )
        with pytest.raises(DataError):
            VoteMatrix(DEFAULT_SCHEMA, 5, records)

    def test_single_run_allowed(self):
        matrix = make_matrix([([2], [0.8])], num_runs=1)
        (label,) = consensus_for(matrix)
        assert (label.label, label.unanimity) == (2, 1)


class TestConsensus:
    def test_consensus_follows_votes(self):
        matrix = make_matrix(
            [
                ([0, 0, 0, 0, 0], [0.9] * 5),
                ([1, 1, 2, 2, 3], [0.9, 0.8, 0.7, 0.6, 0.5]),
            ]
        )
        a, b = consensus_for(matrix)
        assert (a.label, a.unanimity, a.tie_broken) == (0, 5, False)
        assert (b.label, b.unanimity, b.tie_broken) == (1, 2, True)

    def test_consensus_dataset_preserves_order_and_origin(self):
        matrix = make_matrix([([0] * 5, [0.9] * 5), ([3] * 5, [0.9] * 5)])
        data = consensus_dataset(matrix, consensus_for(matrix))
        assert data.ids() == ("i000", "i001")
        assert data.labels() == (0, 3)
        assert all(item.origin == ORIGIN_PSEUDO for item in data.items)


class TestKappa:
    def test_worked_example(self):
        assert abs(cohen_kappa([0, 0, 1, 1], [0, 1, 1, 1]) - 0.5) < 1e-12

    def test_perfect_agreement(self):
        assert cohen_kappa([0, 1, 2, 3], [0, 1, 2, 3]) == 1.0

    def test_degenerate_constant_raters(self):
        assert cohen_kappa([2, 2, 2], [2, 2, 2]) == 1.0

    def test_matches_oracle_on_random_pairs(self):
        rng = np.random.default_rng(6)
        for _ in range(300):
            n = int(rng.integers(2, 40))
            a = rng.integers(0, 4, size=n).tolist()
            b = rng.integers(0, 4, size=n).tolist()
            assert cohen_kappa(a, b) == pytest.approx(oracle_kappa(a, b), abs=1e-12)

    def test_length_mismatch_rejected(self):
        with pytest.raises(DataError):
            cohen_kappa([0, 1], [0])

    @given(st.lists(st.integers(min_value=0, max_value=3), min_size=1, max_size=50))
    @settings(max_examples=100)
    def test_self_agreement_is_always_one(self, labels):
        assert cohen_kappa(labels, labels) == 1.0

    def test_kappa_per_run_compares_each_run_to_consensus(self):
        matrix = make_matrix(
            [
                ([0, 0, 0, 0, 1], [0.9] * 5),
                ([1, 1, 1, 1, 1], [0.9] * 5),
                ([2, 2, 2, 0, 2], [0.9] * 5),
            ]
        )
        consensus = consensus_for(matrix)
        kappas = kappa_per_run(matrix, consensus)
        assert len(kappas) == 5
        assert kappas[0] == 1.0  # run 0 agrees with every consensus label
        assert kappas[4] < 1.0


class TestUnanimityHistogram:
    def test_counts_partition_items(self):
        matrix = make_matrix(
            [
                ([0] * 5, [0.9] * 5),
                ([0, 0, 0, 0, 1], [0.9] * 5),
                ([1, 1, 0, 0, 2], [0.9, 0.85, 0.5, 0.5, 0.5]),
            ]
        )
        hist = unanimity_histogram(consensus_for(matrix), matrix.num_runs, 4)
        assert sum(hist.level_counts) == 3
        assert hist.level_counts[5] == 1 and hist.level_counts[4] == 1
        assert hist.level_counts[2] == 1
        for level, per_class in enumerate(hist.level_class_counts):
            assert sum(per_class) == hist.level_counts[level]
        payload = hist.as_dict()
        assert payload["num_runs"] == 5


class TestEnsembleRuns:
    def make_factory(self):
        def factory(seed: int) -> BuiltinBackend:
            config = ClassifierConfig(num_classes=DEFAULT_SCHEMA.num_classes, seed=seed)
            return BuiltinBackend(DEFAULT_SCHEMA.num_classes, classifier_config=config)

        return factory

    def run(self, blob, **kwargs):
        params = {
            "k_runs": 5,
            "config": SelfTrainConfig(stop_threshold=120),
            "base_seed": 7,
        }
        params.update(kwargs)
        return run_ensemble(blob.labeled, blob.unlabeled, self.make_factory(), **params)

    def test_five_runs_cover_pool(self, blob):
        matrix, traces = self.run(blob)
        assert matrix.num_runs == 5
        assert len(traces) == 5
        assert tuple(rec.id for rec in matrix.records) == blob.unlabeled.ids()

    def test_same_seed_reproduces_votes(self, blob):
        a, _ = self.run(blob)
        b, _ = self.run(blob)
        assert a == b

    def test_parallel_matches_serial(self, blob):
        serial, _ = self.run(blob)
        threaded, _ = self.run(blob, parallel=3)
        assert serial == threaded

    def test_single_run_degenerates_gracefully(self, blob):
        matrix, traces = self.run(blob, k_runs=1)
        assert matrix.num_runs == 1
        assert len(traces) == 1
        assert all(label.unanimity == 1 for label in consensus_for(matrix))


class TestPersistence:
    def matrix(self) -> VoteMatrix:
        return make_matrix(
            [
                ([0, 0, 0, 0, 0], [0.9, 0.8, 0.7, 0.6, 0.5]),
                ([1, 2, 1, 2, 3], [0.5, 0.6, 0.7, 0.8, 0.9]),
            ]
        )

    def test_votes_round_trip(self, tmp_path):
        matrix = self.matrix()
        path = tmp_path / "votes.jsonl"
        write_votes(path, matrix)
        assert read_votes(path) == matrix

    def test_votes_write_is_deterministic(self, tmp_path):
        matrix = self.matrix()
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_votes(a, matrix)
        write_votes(b, matrix)
        assert a.read_bytes() == b.read_bytes()

    def test_consensus_round_trip(self, tmp_path):
        matrix = self.matrix()
        consensus = consensus_for(matrix)
        path = tmp_path / "consensus.jsonl"
        write_consensus(path, matrix, consensus)
        matrix_again, consensus_again = read_consensus(path)
        assert matrix_again == matrix
        assert consensus_again == consensus

    def test_wrong_header_type_rejected(self, tmp_path):
        matrix = self.matrix()
        votes_path = tmp_path / "votes.jsonl"
        write_votes(votes_path, matrix)
        with pytest.raises(DataError):
            read_consensus(votes_path)
