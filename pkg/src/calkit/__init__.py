"""High-recall document review by continuous active learning.

The pieces compose like the loop they implement: ingest a metadata corpus
and topics, featurize them, seed a per-topic session with a synthetic
relevant document, alternate training and judging until the stopping rule
fires, then export ranked TREC runs and score them against qrels.
"""

from .corpus import (
    Corpus,
    CsvSchema,
    DocumentRecord,
    Topic,
    make_synthetic_document,
    parse_metadata_csv,
    parse_topics_xml,
)
from .evaluation import MetricsReport, Qrels, evaluate, parse_qrels
from .features import SparseVector, TfidfVectorizer, Vocabulary, tokenize, vectorize
from .journal import JudgmentJournal
from .learner import LearnerConfig, SgdLogisticRanker
from .runs import RunEntry, build_run, parse_run_file, write_run_file
from .session import (
    Judgment,
    ReviewSession,
    SimulatedAssessor,
    StoppingConfig,
    build_sessions,
    run_simulated,
)

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "CsvSchema",
    "DocumentRecord",
    "Topic",
    "make_synthetic_document",
    "parse_metadata_csv",
    "parse_topics_xml",
    "MetricsReport",
    "Qrels",
    "evaluate",
    "parse_qrels",
    "SparseVector",
    "TfidfVectorizer",
    "Vocabulary",
    "tokenize",
    "vectorize",
    "JudgmentJournal",
    "LearnerConfig",
    "SgdLogisticRanker",
    "RunEntry",
    "build_run",
    "parse_run_file",
    "write_run_file",
    "Judgment",
    "ReviewSession",
    "SimulatedAssessor",
    "StoppingConfig",
    "build_sessions",
    "run_simulated",
    "__version__",
]
