"""Per-topic review loop state for CAL and S-CAL.

A session owns the judgment map and counters for one topic, selects the
next documents to show, retrains its model from accumulated feedback, and
decides when review can stop. CAL ranks the whole unjudged corpus every
batch and stops on ``n >= a*m + b``; S-CAL confines each batch to a
segment of the top-ranked unjudged documents and stops at a fixed
assessment budget (default 300) or when the corpus is exhausted. Both
modes share the same batch growth schedule (size += ceil(size/10)).

Training always includes the topic's synthetic seed document as a
permanent relevant example. S-CAL additionally augments every training
set with 100 random corpus documents temporarily labeled not-relevant;
CAL does the same only while no real not-relevant judgment exists, so
training is always two-class.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .corpus import (
    Corpus,
    Topic,
    check_synthetic_collisions,
    make_synthetic_document,
    synthetic_doc_id,
)
from .features import SparseVector, TfidfVectorizer, Vocabulary
from .learner import LearnerConfig, SgdLogisticRanker

MODES = ("cal", "scal")
VALID_LABELS = (0, 1, 2)
RELEVANT_LABELS = (1, 2)
DEFAULT_SCAL_BUDGET = 300
AUGMENTATION_SIZE = 100


@dataclass(frozen=True)
class Judgment:
    """One relevance call: 0 not relevant, 1 partially relevant, 2 relevant.

    Re-judging a document supersedes the earlier call by latest timestamp.
    """

    topic_id: int
    doc_id: str
    label: int
    assessor_id: str = ""
    timestamp: float | None = None  # UTC seconds; filled by the session if None

    def __post_init__(self) -> None:
        if self.label not in VALID_LABELS:
            raise ValueError(f"label must be one of {VALID_LABELS}, got {self.label}")

    def is_relevant(self) -> bool:
        return self.label in RELEVANT_LABELS


@dataclass(frozen=True)
class StoppingConfig:
    """Stop review once n >= a*m + b, where m counts relevant-or-partial
    reviewed documents and n counts not-relevant reviewed documents."""

    a: float = 1.0
    b: float = 50.0

    def __post_init__(self) -> None:
        if self.a < 0 or self.b < 0:
            raise ValueError("stopping constants a and b must be >= 0")

    def satisfied(self, m: int, n: int) -> bool:
        return n >= self.a * m + self.b


def grow_batch_size(size: int) -> int:
    """Next batch size in the growth schedule: size + ceil(size/10)."""
    return size + math.ceil(size / 10)


@dataclass(frozen=True)
class TranscriptStep:
    doc_id: str
    label: int
    m: int
    n: int
    stopped: bool


class SimulatedAssessor:
    """Oracle assessor backed by a truth table; unknown pairs are label 0."""

    def __init__(self, truth: Mapping[tuple[int, str], int]):
        self.truth = dict(truth)

    def judge(self, topic_id: int, doc_id: str) -> int:
        return self.truth.get((topic_id, doc_id), 0)


class ReviewSession:
    """Mutable review-loop state for one topic.

    One logical writer at a time; concurrent judgment submission must be
    serialized by the caller. Construction seeds the session with the
    topic's synthetic document as a permanent positive training example
    (never judged, never emitted in runs).
    """

    def __init__(
        self,
        topic: Topic,
        corpus: Corpus,
        vectors: Mapping[str, SparseVector],
        synthetic_vector: SparseVector,
        vocabulary: Vocabulary,
        mode: str = "cal",
        learner_config: LearnerConfig = LearnerConfig(),
        stopping: StoppingConfig = StoppingConfig(),
        budget: int | None = None,
        seed: int = 0,
    ):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        if synthetic_doc_id(topic.topic_id) in corpus:
            raise ValueError(
                f"corpus contains {synthetic_doc_id(topic.topic_id)!r}; "
                "synthetic ids must not collide"
            )
        self.topic = topic
        self.corpus = corpus
        self.vectors = vectors
        self.synthetic_vector = synthetic_vector
        self.vocabulary = vocabulary
        self.mode = mode
        self.learner_config = learner_config
        self.stopping = stopping
        if mode == "scal":
            self.budget: int | None = DEFAULT_SCAL_BUDGET if budget is None else int(budget)
        else:
            self.budget = None if budget is None else int(budget)
        self.seed = seed

        self.judgments: dict[str, Judgment] = {}
        self.m = 0
        self.n = 0
        self.batch_index = 0
        self.batch_size = 1
        self.pending: dict[str, None] = {}
        self.segment: list[str] | None = None
        self.model: SgdLogisticRanker | None = None
        self.refresh_count = 0
        self.last_training_summary_: dict[str, int] | None = None
        self._last_timestamp = 0.0

    # ------------------------------------------------------------------
    # counters and predicates

    @property
    def assessed_count(self) -> int:
        return len(self.judgments)

    @property
    def budget_remaining(self) -> int | None:
        if self.budget is None:
            return None
        return self.budget - self.assessed_count

    def recount(self) -> tuple[int, int]:
        """(m, n) recomputed from the effective judgment map."""
        m = sum(1 for j in self.judgments.values() if j.is_relevant())
        return m, len(self.judgments) - m

    def corpus_exhausted(self) -> bool:
        return self.assessed_count >= len(self.corpus)

    def should_stop(self) -> bool:
        if self.mode == "scal":
            return (
                self.budget is not None and self.assessed_count >= self.budget
            ) or self.corpus_exhausted()
        return self.stopping.satisfied(self.m, self.n)

    # ------------------------------------------------------------------
    # model refresh

    def _augmentation_sample(self) -> list[str]:
        rng = np.random.default_rng([self.seed, self.refresh_count])
        size = min(AUGMENTATION_SIZE, len(self.corpus))
        picks = rng.choice(len(self.corpus), size=size, replace=False)
        return [self.corpus.documents[i].doc_id for i in picks]

    def refresh_model(self) -> None:
        """Retrain on the synthetic positive plus all effective judgments.

        S-CAL always augments with random presumed-non-relevant documents;
        CAL augments only while no real not-relevant judgment exists. The
        augmented examples are discarded after training.
        """
        X: list[SparseVector] = [self.synthetic_vector]
        y: list[int] = [1]
        negatives = 0
        for doc_id, judgment in self.judgments.items():
            X.append(self.vectors[doc_id])
            y.append(1 if judgment.is_relevant() else 0)
            negatives += 0 if judgment.is_relevant() else 1

        augmented = 0
        if self.mode == "scal" or negatives == 0:
            for doc_id in self._augmentation_sample():
                X.append(self.vectors[doc_id])
                y.append(0)
                augmented += 1

        model = SgdLogisticRanker.from_config(self.learner_config)
        model.fit(X, y, n_features=len(self.vocabulary))
        self.model = model
        self.last_training_summary_ = {
            "positives": 1 + (len(self.judgments) - negatives),
            "negatives": negatives,
            "augmented": augmented,
            "total": len(X),
        }
        self.refresh_count += 1

    # ------------------------------------------------------------------
    # document selection

    def _require_model(self) -> SgdLogisticRanker:
        if self.model is None:
            raise RuntimeError(
                f"topic {self.topic.topic_id}: refresh_model() before selecting documents"
            )
        return self.model

    def _available(self) -> list[str]:
        return [
            doc_id
            for doc_id in self.corpus.doc_ids
            if doc_id not in self.judgments and doc_id not in self.pending
        ]

    def _ranked_available(self) -> list[str]:
        model = self._require_model()
        return [doc_id for doc_id, _ in model.rank(self._available(), self.vectors)]

    def _segment_capacity(self) -> int:
        capacity = self.batch_size
        if self.budget_remaining is not None:
            capacity = min(capacity, max(self.budget_remaining, 0))
        return capacity

    def _select_segment(self) -> None:
        self.segment = self._ranked_available()[: self._segment_capacity()]

    def next_documents(self, count: int) -> list[str]:
        """Top-ranked unjudged documents to present next; they move into
        the pending set and are not offered again unless released.

        CAL draws from the whole corpus; S-CAL only from the current batch
        segment. Returns fewer than ``count`` (possibly none) when
        candidates run out.
        """
        if count < 1:
            raise ValueError("count must be >= 1")
        self._require_model()
        if self.mode == "scal":
            if self.segment is None:
                self._select_segment()
            chosen = [
                doc_id
                for doc_id in self.segment
                if doc_id not in self.judgments and doc_id not in self.pending
            ][:count]
        else:
            chosen = self._ranked_available()[:count]
        for doc_id in chosen:
            self.pending[doc_id] = None
        return chosen

    def release_pending(self, doc_id: str) -> None:
        """Re-queue a pending document (e.g. an abandoned lease)."""
        self.pending.pop(doc_id, None)

    def advance_batch(self) -> None:
        """Complete the current batch: grow the size per the schedule and,
        in S-CAL mode, retire the segment. The next segment (the next
        batch_size top-ranked unjudged documents) materializes on the next
        call to :meth:`next_documents`, under the model current then."""
        self.batch_index += 1
        self.batch_size = grow_batch_size(self.batch_size)
        if self.mode == "scal":
            self.segment = None

    # ------------------------------------------------------------------
    # judgments

    def next_timestamp(self) -> float:
        """Current UTC seconds, strictly after any timestamp seen so far."""
        now = time.time()
        if now <= self._last_timestamp:
            now = self._last_timestamp + 1e-6
        return now

    def _validate_judgment(self, judgment: Judgment, require_pending: bool) -> None:
        if judgment.topic_id != self.topic.topic_id:
            raise ValueError(
                f"judgment for topic {judgment.topic_id} submitted to "
                f"session for topic {self.topic.topic_id}"
            )
        if judgment.doc_id == synthetic_doc_id(self.topic.topic_id):
            raise ValueError("the synthetic seed document cannot be judged")
        if judgment.doc_id not in self.corpus:
            raise KeyError(f"unknown doc_id {judgment.doc_id!r}")
        first_time = judgment.doc_id not in self.judgments
        if require_pending and first_time and judgment.doc_id not in self.pending:
            raise ValueError(
                f"doc {judgment.doc_id!r} was never presented; judge pending "
                "documents or re-judge previously judged ones"
            )
        if (
            first_time
            and self.mode == "scal"
            and self.budget is not None
            and self.assessed_count >= self.budget
        ):
            raise ValueError(
                f"assessment budget of {self.budget} is exhausted for "
                f"topic {self.topic.topic_id}"
            )

    def _apply(self, judgment: Judgment) -> None:
        if judgment.timestamp is None:
            judgment = dataclasses.replace(judgment, timestamp=self.next_timestamp())
        self._last_timestamp = max(self._last_timestamp, judgment.timestamp)
        current = self.judgments.get(judgment.doc_id)
        if current is None or judgment.timestamp >= current.timestamp:
            self.judgments[judgment.doc_id] = judgment
        self.pending.pop(judgment.doc_id, None)
        self.m, self.n = self.recount()

    def validate_judgment(self, judgment: Judgment) -> None:
        """Raise unless the judgment could be recorded right now."""
        self._validate_judgment(judgment, require_pending=True)

    def record_judgment(self, judgment: Judgment) -> Judgment:
        """Record a judgment for a pending (or previously judged) document.

        Returns the effective judgment as stored, with its timestamp
        filled in.
        """
        self._validate_judgment(judgment, require_pending=True)
        self._apply(judgment)
        return self.judgments[judgment.doc_id]

    def apply_judgment(self, judgment: Judgment) -> None:
        """Replay path: apply a journaled judgment without pending checks."""
        self._validate_judgment(judgment, require_pending=False)
        self._apply(judgment)

    def rebuild_schedule(self) -> int:
        """Derive the batch schedule from the assessed count (replay path).

        Returns the number of judgments already inside the current batch.
        """
        self.batch_index = 0
        self.batch_size = 1
        consumed = 0
        while consumed + self.batch_size <= self.assessed_count:
            consumed += self.batch_size
            self.batch_index += 1
            self.batch_size = grow_batch_size(self.batch_size)
        self.segment = None
        return self.assessed_count - consumed


def build_sessions(
    corpus: Corpus,
    topics: Sequence[Topic],
    mode: str = "cal",
    learner_config: LearnerConfig = LearnerConfig(),
    stopping: StoppingConfig = StoppingConfig(),
    budget: int | None = None,
    seed: int = 0,
    vectorizer: TfidfVectorizer | None = None,
) -> tuple[TfidfVectorizer, dict[int, ReviewSession]]:
    """Fit features over the corpus plus all synthetic seeds and build one
    session per topic sharing the vectors."""
    check_synthetic_collisions(corpus, topics)
    synthetic = {t.topic_id: make_synthetic_document(t) for t in topics}
    if vectorizer is None:
        vectorizer = TfidfVectorizer().fit(corpus.documents, synthetic.values())
    vectors = {
        doc.doc_id: vec
        for doc, vec in zip(corpus.documents, vectorizer.transform(corpus.documents))
    }
    sessions = {}
    for topic in topics:
        sessions[topic.topic_id] = ReviewSession(
            topic=topic,
            corpus=corpus,
            vectors=vectors,
            synthetic_vector=vectorizer.transform_one(synthetic[topic.topic_id]),
            vocabulary=vectorizer.vocabulary_,
            mode=mode,
            learner_config=learner_config,
            stopping=stopping,
            budget=budget,
            seed=seed,
        )
    return vectorizer, sessions


def run_simulated(
    session: ReviewSession,
    oracle: SimulatedAssessor,
    max_assessments: int | None = None,
    assessor_id: str = "oracle",
    on_batch: Callable[[ReviewSession], None] | None = None,
) -> list[TranscriptStep]:
    """Drive the loop with an oracle assessor until stopping (or a cap).

    Each batch is: refresh the model, present the batch, record oracle
    judgments; then grow the batch. The transcript lists every judgment in
    order with the counters and stop flag observed right after it.
    """
    transcript: list[TranscriptStep] = []
    topic_id = session.topic.topic_id

    def capped() -> bool:
        return max_assessments is not None and len(transcript) >= max_assessments

    while not session.should_stop() and not capped():
        session.refresh_model()
        if on_batch is not None:
            on_batch(session)
        batch = session.next_documents(session.batch_size)
        if not batch:
            break
        for doc_id in batch:
            label = oracle.judge(topic_id, doc_id)
            session.record_judgment(
                Judgment(topic_id=topic_id, doc_id=doc_id, label=label, assessor_id=assessor_id)
            )
            transcript.append(
                TranscriptStep(doc_id, label, session.m, session.n, session.should_stop())
            )
            if session.should_stop() or capped():
                return transcript
        session.advance_batch()
    return transcript
