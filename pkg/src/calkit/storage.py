"""Data-directory layout shared by the CLI and the assessor service."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import (
    Corpus,
    Topic,
    load_corpus_jsonl,
    load_topics_json,
    save_corpus_jsonl,
    save_topics_json,
)
from .features import Vocabulary


@dataclass(frozen=True)
class DataDir:
    root: Path

    @property
    def corpus_path(self) -> Path:
        return self.root / "corpus.jsonl"

    @property
    def vocabulary_path(self) -> Path:
        return self.root / "vocabulary.tsv"

    @property
    def topics_path(self) -> Path:
        return self.root / "topics.json"

    @property
    def journal_path(self) -> Path:
        return self.root / "judgments.jsonl"

    @property
    def runs_dir(self) -> Path:
        return self.root / "runs"

    def ensure(self) -> "DataDir":
        self.root.mkdir(parents=True, exist_ok=True)
        return self


def save_workspace(
    data_dir: DataDir,
    corpus: Corpus,
    vocabulary: Vocabulary,
    topics: Sequence[Topic],
) -> None:
    data_dir.ensure()
    save_corpus_jsonl(corpus, data_dir.corpus_path)
    vocabulary.save_tsv(data_dir.vocabulary_path)
    save_topics_json(topics, data_dir.topics_path)


def load_workspace(data_dir: DataDir) -> tuple[Corpus, Vocabulary, list[Topic]]:
    for path in (data_dir.corpus_path, data_dir.vocabulary_path, data_dir.topics_path):
        if not path.exists():
            raise FileNotFoundError(
                f"{path} not found; run `calkit ingest` into {data_dir.root} first"
            )
    return (
        load_corpus_jsonl(data_dir.corpus_path),
        Vocabulary.load_tsv(data_dir.vocabulary_path),
        load_topics_json(data_dir.topics_path),
    )
