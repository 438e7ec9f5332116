"""Bag-of-words featurization: tokenizer, vocabulary fitting, and tf-idf transforms."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Dataset, as_post
from .errors import DataError
from .ioutil import atomic_write_jsonl, read_jsonl

# Maximal runs of Unicode alphanumerics; underscores and apostrophes split tokens.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class FeaturizerConfig:
    max_tokens: int = 250
    min_doc_freq: int = 2
    weighting: str = "tf-idf"

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise DataError(f"max_tokens must be positive, got {self.max_tokens}")
        if self.min_doc_freq < 1:
            raise DataError(f"min_doc_freq must be positive, got {self.min_doc_freq}")
        if self.weighting not in ("tf-idf", "counts"):
            raise DataError(f"unknown weighting {self.weighting!r}")


def tokenize(text: str, max_tokens: int = 250) -> list[str]:
    """Lowercase and split into alphanumeric runs, truncated to the first max_tokens."""
    return _TOKEN_RE.findall(text.lower())[:max_tokens]


@dataclass(frozen=True)
class FeatureVector:
    """Sparse vector: parallel (indices, values), indices strictly increasing."""

    indices: tuple[int, ...]
    values: tuple[float, ...]
    dim: int


@dataclass(frozen=True)
class Vocabulary:
    """Fitted token inventory with document frequencies for idf weighting."""

    config: FeaturizerConfig
    index_of: Mapping[str, int]
    doc_freq: tuple[int, ...]
    corpus_size: int
    _idf: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = self.corpus_size
        idf = tuple(math.log((1 + n) / (1 + df)) + 1.0 for df in self.doc_freq)
        object.__setattr__(self, "_idf", idf)

    def __len__(self) -> int:
        return len(self.doc_freq)

    def transform(self, text: str) -> FeatureVector:
        tokens = tokenize(text, self.config.max_tokens)
        counts: dict[int, int] = {}
        for tok in tokens:
            idx = self.index_of.get(tok)
            if idx is not None:
                counts[idx] = counts.get(idx, 0) + 1
        if not counts:
            return FeatureVector((), (), len(self))
        indices = tuple(sorted(counts))
        if self.config.weighting == "counts":
            return FeatureVector(indices, tuple(float(counts[i]) for i in indices), len(self))
        values = [counts[i] * self._idf[i] for i in indices]
        norm = math.sqrt(sum(v * v for v in values))
        if norm > 0:
            values = [v / norm for v in values]
        return FeatureVector(indices, tuple(values), len(self))

    def transform_matrix(self, texts: Sequence[str]) -> sp.csr_matrix:
        """Stack transforms of many texts into one CSR matrix of shape (n, len(vocab))."""
        data: list[float] = []
        col: list[int] = []
        indptr = [0]
        for text in texts:
            vec = self.transform(text)
            col.extend(vec.indices)
            data.extend(vec.values)
            indptr.append(len(col))
        return sp.csr_matrix(
            (np.asarray(data), np.asarray(col, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
            shape=(len(texts), len(self)),
        )


def fit_vocabulary(
    corpus: Dataset | Iterable[str], config: FeaturizerConfig = FeaturizerConfig()
) -> Vocabulary:
    """Count document frequencies over a corpus and keep tokens seen in >= min_doc_freq docs.

    Indices are assigned by lexicographic token order so a vocabulary is reproducible
    from the corpus alone.
    """
    if isinstance(corpus, Dataset):
        texts: Iterable[str] = (as_post(item).text for item in corpus)
    else:
        texts = corpus
    doc_freq: dict[str, int] = {}
    n_docs = 0
    for text in texts:
        n_docs += 1
        for tok in set(tokenize(text, config.max_tokens)):
            doc_freq[tok] = doc_freq.get(tok, 0) + 1
    kept = sorted(tok for tok, df in doc_freq.items() if df >= config.min_doc_freq)
    if not kept:
        raise DataError(
            f"empty vocabulary: no token appears in at least {config.min_doc_freq} documents"
        )
    index_of = {tok: i for i, tok in enumerate(kept)}
    return Vocabulary(
        config=config,
        index_of=index_of,
        doc_freq=tuple(doc_freq[tok] for tok in kept),
        corpus_size=n_docs,
    )


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write a vocabulary as JSONL: one header record, then one record per token."""
    header = {
        "type": "vocabulary",
        "corpus_size": vocab.corpus_size,
        "max_tokens": vocab.config.max_tokens,
        "min_doc_freq": vocab.config.min_doc_freq,
        "weighting": vocab.config.weighting,
    }
    tokens = sorted(vocab.index_of.items(), key=lambda kv: kv[1])
    rows = [{"token": tok, "index": i, "doc_freq": vocab.doc_freq[i]} for tok, i in tokens]
    atomic_write_jsonl(path, [header] + rows)


def load_vocabulary(path: str | Path) -> Vocabulary:
    rows = read_jsonl(path)
    if not rows:
        raise DataError(f"{path}: empty vocabulary file")
    _, header = rows[0]
    if header.get("type") != "vocabulary":
        raise DataError(f"{path}: first record must be the vocabulary header")
    try:
        config = FeaturizerConfig(
            max_tokens=int(header["max_tokens"]),
            min_doc_freq=int(header["min_doc_freq"]),
            weighting=str(header["weighting"]),
        )
        corpus_size = int(header["corpus_size"])
    except KeyError as exc:
        raise DataError(f"{path}: vocabulary header missing field {exc}") from None
    index_of: dict[str, int] = {}
    doc_freq: dict[int, int] = {}
    for lineno, rec in rows[1:]:
        try:
            token, index, df = rec["token"], int(rec["index"]), int(rec["doc_freq"])
        except KeyError as exc:
            raise DataError(f"{path}: line {lineno}: missing field {exc}") from None
        if token in index_of:
            raise DataError(f"{path}: line {lineno}: duplicate token {token!r}")
        index_of[token] = index
        doc_freq[index] = df
    if sorted(doc_freq) != list(range(len(doc_freq))):
        raise DataError(f"{path}: token indices must cover 0..{len(doc_freq) - 1}")
    return Vocabulary(
        config=config,
        index_of=index_of,
        doc_freq=tuple(doc_freq[i] for i in range(len(doc_freq))),
        corpus_size=corpus_size,
    )
