"""Append-only judgment journal.

JSON Lines, one judgment per line, fsync'd before the append returns. The
journal is the durable source of truth for a review deployment: replaying
it in order reconstructs every session's judgment map and counters
exactly.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Iterator

from .errors import SchemaError
from .session import Judgment

_FIELDS = ("topic", "doc", "label", "assessor", "timestamp")


def _to_line(judgment: Judgment) -> str:
    return json.dumps(
        {
            "topic": judgment.topic_id,
            "doc": judgment.doc_id,
            "label": judgment.label,
            "assessor": judgment.assessor_id,
            "timestamp": judgment.timestamp,
        },
        ensure_ascii=False,
    )


def _from_obj(obj: dict, where: str) -> Judgment:
    missing = [f for f in _FIELDS if f not in obj]
    if missing:
        raise SchemaError(f"{where}: missing fields {missing}")
    return Judgment(
        topic_id=int(obj["topic"]),
        doc_id=str(obj["doc"]),
        label=int(obj["label"]),
        assessor_id=str(obj["assessor"]),
        timestamp=float(obj["timestamp"]),
    )


class JudgmentJournal:
    """Durable append-only log of judgments for one deployment."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, judgment: Judgment) -> None:
        """Append one judgment; returns only after the line hits disk."""
        if judgment.timestamp is None:
            raise ValueError("journaled judgments must carry a timestamp")
        line = _to_line(judgment) + "\n"
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())

    def replay(self) -> Iterator[Judgment]:
        """Yield journaled judgments in append order; empty if no file."""
        if not self.path.exists():
            return
        with self.path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"{self.path}:{lineno}: invalid JSON") from exc
                yield _from_obj(obj, f"{self.path}:{lineno}")
