"""Shared fixtures: deterministic word-soup corpora and a tuned blob fixture."""

from __future__ import annotations

import random

import pytest

from semilabel.corpus import DEFAULT_SCHEMA, Dataset, LabeledPost, Post
from semilabel.synthetic import make_blob_fixture

# One distinctive vocabulary per class plus shared filler, so that a bag-of-words
# model can actually learn the mapping from a handful of examples.
WORD_POOLS = (
    ("amber", "basalt", "copper", "dune", "ochre"),
    ("ember", "fjord", "garnet", "heath", "inlet"),
    ("iris", "jasper", "kelp", "loam", "moss"),
    ("mesa", "nectar", "onyx", "pumice", "quartz"),
)
SHARED_WORDS = ("the", "a", "of", "with", "quiet", "morning", "again")


def word_posts(count: int, label: int, seed: int, prefix: str) -> list[Post]:
    rng = random.Random(seed)
    pool = WORD_POOLS[label]
    posts = []
    for i in range(count):
        words = [rng.choice(pool) for _ in range(5)] + [rng.choice(SHARED_WORDS) for _ in range(3)]
        rng.shuffle(words)
        posts.append(Post(f"{prefix}{label}-{i:03d}", " ".join(words)))
    return posts


def word_dataset(counts, seed: int = 0, prefix: str = "w") -> Dataset:
    """Labeled text corpus with `counts[c]` posts of class c."""
    items = []
    for label, count in enumerate(counts):
        for post in word_posts(count, label, seed * 97 + label, prefix):
            items.append(LabeledPost(post, label))
    return Dataset(DEFAULT_SCHEMA, tuple(items))


@pytest.fixture(scope="session")
def table_corpus() -> Dataset:
    """500 labeled posts with the documented reference class mix (129, 190, 140, 41)."""
    return word_dataset((129, 190, 140, 41), seed=11)


@pytest.fixture(scope="session")
def blob():
    """Small feature-space fixture shared by training-path tests."""
    return make_blob_fixture(seed=7, n_labeled=100, n_unlabeled=150, n_heldout=80)
