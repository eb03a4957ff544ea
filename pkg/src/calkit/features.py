"""Sparse tf-idf features over a corpus-derived vocabulary.

The scheme is sublinear tf with smoothed idf and L2 normalization:

    weight(t) = (1 + ln tf) * (ln((N + 1) / (df(t) + 1)) + 1)

where N is the number of documents the vocabulary was fitted on. Word
unigrams only; tokens are maximal runs of alphanumeric characters,
lowercased. The vocabulary is frozen per corpus release: a new release
means refit and retrain.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .base import BaseEstimator, check_is_fitted
from .corpus import DocumentRecord
from .errors import SchemaError

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercased maximal alphanumeric runs, in order of appearance."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class SparseVector:
    """L2-normalized sparse vector with strictly increasing term ids.

    Zero weights are never stored; the empty vector is allowed (documents
    with no in-vocabulary terms).
    """

    indices: np.ndarray  # int64, strictly increasing
    values: np.ndarray  # float64, no zeros

    @classmethod
    def empty(cls) -> "SparseVector":
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))

    def dot_dense(self, weights: np.ndarray) -> float:
        if self.nnz == 0:
            return 0.0
        return float(np.dot(weights[self.indices], self.values))

    def scaled(self, factor: float) -> "SparseVector":
        return SparseVector(self.indices, self.values * factor)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return np.array_equal(self.indices, other.indices) and np.array_equal(
            self.values, other.values
        )


class Vocabulary:
    """term -> dense term_id mapping with per-term document frequencies."""

    def __init__(self, terms: Sequence[str], df: Sequence[int], corpus_size: int):
        self.terms: list[str] = list(terms)
        self.term_to_id: dict[str, int] = {t: i for i, t in enumerate(self.terms)}
        self.df: np.ndarray = np.asarray(df, dtype=np.int64)
        self.corpus_size = int(corpus_size)
        if len(self.term_to_id) != len(self.terms):
            raise ValueError("vocabulary terms are not unique")
        if self.df.shape != (len(self.terms),):
            raise ValueError("df length does not match term count")
        if len(self.terms) and not (
            (self.df >= 1).all() and (self.df <= self.corpus_size).all()
        ):
            raise ValueError("document frequencies must lie in [1, corpus_size]")

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.term_to_id

    def term(self, term_id: int) -> str:
        return self.terms[term_id]

    def idf(self, term_id: int) -> float:
        return math.log((self.corpus_size + 1) / (self.df[term_id] + 1)) + 1.0

    def save_tsv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write(f"corpus_size\t{self.corpus_size}\n")
            for term_id, term in enumerate(self.terms):
                fh.write(f"{term}\t{term_id}\t{self.df[term_id]}\n")

    @classmethod
    def load_tsv(cls, path: str | Path) -> "Vocabulary":
        with Path(path).open(encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split("\t")
            if len(header) != 2 or header[0] != "corpus_size":
                raise SchemaError(f"{path}: expected 'corpus_size<TAB>N' header line")
            corpus_size = int(header[1])
            terms: list[str] = []
            df: list[int] = []
            for lineno, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 3:
                    raise SchemaError(f"{path}:{lineno}: expected 3 tab-separated fields")
                term, term_id, count = parts
                if int(term_id) != len(terms):
                    raise SchemaError(f"{path}:{lineno}: term ids must be contiguous")
                terms.append(term)
                df.append(int(count))
        return cls(terms, df, corpus_size)


def build_vocabulary(
    documents: Iterable[DocumentRecord],
    synthetic_documents: Iterable[DocumentRecord] = (),
) -> Vocabulary:
    """Fit a vocabulary over the union of corpus and synthetic documents.

    Term ids are assigned in first-seen order; df counts distinct
    documents containing the term.
    """
    terms: list[str] = []
    term_to_id: dict[str, int] = {}
    df: list[int] = []
    count = 0
    for doc in list(documents) + list(synthetic_documents):
        count += 1
        for token in set(tokenize(doc.full_text())):
            term_id = term_to_id.get(token)
            if term_id is None:
                term_to_id[token] = len(terms)
                terms.append(token)
                df.append(1)
            else:
                df[term_id] += 1
    if count == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    return Vocabulary(terms, df, count)


def vectorize(doc: DocumentRecord, vocab: Vocabulary) -> SparseVector:
    """tf-idf vector for a document; out-of-vocabulary terms are dropped."""
    counts: dict[int, int] = {}
    for token in tokenize(doc.full_text()):
        term_id = vocab.term_to_id.get(token)
        if term_id is not None:
            counts[term_id] = counts.get(term_id, 0) + 1
    if not counts:
        return SparseVector.empty()
    indices = np.array(sorted(counts), dtype=np.int64)
    raw = np.array(
        [(1.0 + math.log(counts[i])) * vocab.idf(i) for i in indices],
        dtype=np.float64,
    )
    norm = math.sqrt(float(np.dot(raw, raw)))
    return SparseVector(indices, raw / norm)


class TfidfVectorizer(BaseEstimator):
    """Estimator wrapper around vocabulary fitting and vectorization.

    fit() accepts the corpus documents (plus any synthetic seed documents);
    transform() maps documents to :class:`SparseVector`.
    """

    def __init__(self) -> None:
        self.vocabulary_: Vocabulary | None = None

    def fit(
        self,
        documents: Iterable[DocumentRecord],
        synthetic_documents: Iterable[DocumentRecord] = (),
    ) -> "TfidfVectorizer":
        self.vocabulary_ = build_vocabulary(documents, synthetic_documents)
        return self

    def transform(self, documents: Iterable[DocumentRecord]) -> list[SparseVector]:
        check_is_fitted(self, "vocabulary_")
        return [vectorize(doc, self.vocabulary_) for doc in documents]

    def transform_one(self, doc: DocumentRecord) -> SparseVector:
        check_is_fitted(self, "vocabulary_")
        return vectorize(doc, self.vocabulary_)

    def fit_transform(
        self,
        documents: Iterable[DocumentRecord],
        synthetic_documents: Iterable[DocumentRecord] = (),
    ) -> list[SparseVector]:
        docs = list(documents)
        self.fit(docs, synthetic_documents)
        return self.transform(docs)
