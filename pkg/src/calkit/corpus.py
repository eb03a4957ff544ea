"""Corpus and topic ingestion.

Documents are judged and ranked on metadata fields only (title, abstract,
authors, year, publisher). The metadata file is a UTF-8 CSV with a header
row; column names are configurable and default to CORD-19 conventions.
Topics come from a TREC-style XML file and are also used to fabricate one
"synthetic" seed document per topic, which serves as the initial relevant
training example and never appears in any output run.
"""

from __future__ import annotations

import csv
import json
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Iterator

from .errors import SchemaError

log = logging.getLogger(__name__)

SYNTHETIC_PREFIX = "synthetic-"


@dataclass(frozen=True)
class DocumentRecord:
    """One corpus item; all fields are free text, only doc_id is required."""

    doc_id: str
    title: str = ""
    abstract: str = ""
    authors: str = ""
    year: str = ""
    publisher: str = ""

    def full_text(self) -> str:
        """Concatenation of every metadata field, used for featurization."""
        return " ".join(
            (self.title, self.abstract, self.authors, self.year, self.publisher)
        )


@dataclass(frozen=True)
class Topic:
    topic_id: int
    query: str
    question: str = ""
    narrative: str = ""

    def __post_init__(self) -> None:
        if self.topic_id <= 0:
            raise ValueError(f"topic_id must be positive, got {self.topic_id}")
        if not self.query:
            raise ValueError(f"topic {self.topic_id} has an empty query")


class Corpus:
    """Ordered, immutable collection of documents indexed by doc_id."""

    def __init__(self, documents: Iterable[DocumentRecord]):
        self.documents: list[DocumentRecord] = list(documents)
        self.index: dict[str, int] = {}
        for position, doc in enumerate(self.documents):
            if not doc.doc_id:
                raise ValueError(f"document at position {position} has empty doc_id")
            if doc.doc_id in self.index:
                raise ValueError(f"duplicate doc_id {doc.doc_id!r} in corpus")
            self.index[doc.doc_id] = position

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[DocumentRecord]:
        return iter(self.documents)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.index

    def get(self, doc_id: str) -> DocumentRecord:
        return self.documents[self.index[doc_id]]

    @property
    def doc_ids(self) -> list[str]:
        return [doc.doc_id for doc in self.documents]


@dataclass(frozen=True)
class CsvSchema:
    """Maps the logical record fields to metadata CSV column names.

    Defaults follow the CORD-19 metadata file. Only the doc_id and title
    columns are required to be present in the header; missing optional
    columns yield empty text.
    """

    doc_id: str = "cord_uid"
    title: str = "title"
    abstract: str = "abstract"
    authors: str = "authors"
    year: str = "publish_time"
    publisher: str = "journal"


@dataclass
class IngestResult:
    corpus: Corpus
    duplicates: int = 0
    skipped: int = 0

    @property
    def warnings(self) -> int:
        return self.duplicates + self.skipped


def parse_metadata_csv(path: str | Path, schema: CsvSchema = CsvSchema()) -> IngestResult:
    """Parse a metadata CSV into a corpus.

    Rows with an empty doc_id are skipped and counted; for duplicate
    doc_ids the first occurrence wins and later ones are counted as
    duplicates. Raises :class:`SchemaError` when a required header column
    is absent and ``FileNotFoundError`` when the file does not exist.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for required in (schema.doc_id, schema.title):
            if required not in header:
                raise SchemaError(
                    f"metadata file {path} is missing required column {required!r}"
                )

        def cell(row: dict, column: str) -> str:
            value = row.get(column)
            return value.strip() if value else ""

        records: list[DocumentRecord] = []
        seen: set[str] = set()
        duplicates = 0
        skipped = 0
        for row in reader:
            doc_id = cell(row, schema.doc_id)
            if not doc_id:
                skipped += 1
                continue
            if doc_id in seen:
                duplicates += 1
                continue
            seen.add(doc_id)
            records.append(
                DocumentRecord(
                    doc_id=doc_id,
                    title=cell(row, schema.title),
                    abstract=cell(row, schema.abstract),
                    authors=cell(row, schema.authors),
                    year=cell(row, schema.year),
                    publisher=cell(row, schema.publisher),
                )
            )

    if duplicates or skipped:
        log.warning(
            "%s: dropped %d duplicate-id rows, skipped %d empty-id rows",
            path,
            duplicates,
            skipped,
        )
    return IngestResult(Corpus(records), duplicates=duplicates, skipped=skipped)


def parse_topics_xml(path: str | Path) -> list[Topic]:
    """Parse a TREC-style topics XML file.

    Expected structure: ``<topics><topic number="N"><query/><question/>
    <narrative/></topic>...</topics>``. Text is trimmed. Malformed XML
    raises ``xml.etree.ElementTree.ParseError`` (which carries the line
    number); structural problems raise :class:`SchemaError`.
    """
    tree = ET.parse(str(path))
    root = tree.getroot()
    topics: list[Topic] = []
    seen: set[int] = set()
    for element in root.iter("topic"):
        number_attr = element.get("number")
        if number_attr is None:
            raise SchemaError(f"topic element in {path} lacks a number attribute")
        try:
            number = int(number_attr)
        except ValueError:
            raise SchemaError(f"topic number {number_attr!r} is not an integer") from None
        if number in seen:
            raise SchemaError(f"duplicate topic number {number} in {path}")
        seen.add(number)

        def child_text(tag: str) -> str | None:
            node = element.find(tag)
            if node is None:
                return None
            return (node.text or "").strip()

        query = child_text("query")
        if query is None:
            raise SchemaError(f"topic {number} is missing its query element")
        topics.append(
            Topic(
                topic_id=number,
                query=query,
                question=child_text("question") or "",
                narrative=child_text("narrative") or "",
            )
        )
    return topics


def synthetic_doc_id(topic_id: int) -> str:
    return f"{SYNTHETIC_PREFIX}{topic_id}"


def is_synthetic(doc_id: str) -> bool:
    return doc_id.startswith(SYNTHETIC_PREFIX)


def make_synthetic_document(topic: Topic) -> DocumentRecord:
    """Fabricate the seed document for a topic.

    The abstract is the space-joined query, question and narrative; the
    title is the query. The record exists only to bootstrap training and
    must never be emitted in a run.
    """
    return DocumentRecord(
        doc_id=synthetic_doc_id(topic.topic_id),
        title=topic.query,
        abstract=" ".join((topic.query, topic.question, topic.narrative)).strip(),
    )


def check_synthetic_collisions(corpus: Corpus, topics: Iterable[Topic]) -> None:
    """Error out if a corpus doc_id would collide with a synthetic id."""
    for topic in topics:
        doc_id = synthetic_doc_id(topic.topic_id)
        if doc_id in corpus:
            raise ValueError(
                f"corpus already contains {doc_id!r}; synthetic ids must be unique"
            )


def save_corpus_jsonl(corpus: Corpus, path: str | Path) -> None:
    """Write one JSON object per document (the ingest cache format)."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for doc in corpus:
            fh.write(json.dumps(doc.__dict__, ensure_ascii=False) + "\n")


def load_corpus_jsonl(path: str | Path) -> Corpus:
    names = {f.name for f in fields(DocumentRecord)}
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                raw = json.loads(line)
                records.append(DocumentRecord(**{k: v for k, v in raw.items() if k in names}))
    return Corpus(records)


def save_topics_json(topics: Iterable[Topic], path: str | Path) -> None:
    payload = [topic.__dict__ for topic in topics]
    Path(path).write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")


def load_topics_json(path: str | Path) -> list[Topic]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [Topic(**raw) for raw in payload]
