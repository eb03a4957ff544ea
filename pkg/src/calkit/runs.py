"""Ranked run construction and TREC run-file interchange.

Three orderings are supported for the per-topic 1000-document lists:

* ``i``   - judged relevant, then judged partially relevant, then unseen
  documents by descending model score; judged not-relevant excluded.
* ``ii``  - every document by descending model score, no special
  treatment of judged documents.
* ``iii`` - like ``i`` but with the judged not-relevant block kept,
  between the partially relevant block and the unseen tail.

Judged blocks are ordered by judgment timestamp. The emitted score column
must decrease strictly while surviving 6-significant-digit printing, so
scores live on the 6-significant-digit grid: model scores are rounded to
it (nudged down on ties) and judged blocks get synthesized grid values
above the maximum model score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

from .corpus import is_synthetic
from .errors import RunFormatError, TrainingError

if TYPE_CHECKING:
    from .session import ReviewSession

ORDERING_METHODS = ("i", "ii", "iii")
DEFAULT_DEPTH = 1000


@dataclass(frozen=True)
class RunEntry:
    topic_id: int
    doc_id: str
    rank: int
    score: float
    run_tag: str


def _sig_round(x: float) -> float:
    """Round to the 6-significant-digit grid (print/parse stable)."""
    return float(f"{x:.6g}")


def _grid_step(x: float) -> float:
    if x == 0.0:
        return 1e-6
    return 10.0 ** (math.floor(math.log10(abs(x))) - 5)


def next_lower_score(x: float) -> float:
    """Largest 6-significant-digit grid value strictly below x."""
    step = _grid_step(x)
    candidate = _sig_round(x - step)
    while candidate >= x:
        step *= 2.0
        candidate = _sig_round(x - step)
    return candidate


def next_higher_score(x: float) -> float:
    """Smallest 6-significant-digit grid value strictly above x."""
    step = _grid_step(x)
    candidate = _sig_round(x + step)
    while candidate <= x:
        step *= 2.0
        candidate = _sig_round(x + step)
    return candidate


def build_run(
    session: "ReviewSession",
    method: str,
    depth: int = DEFAULT_DEPTH,
    tag: str = "calkit",
) -> list[RunEntry]:
    """Build the ranked list for one session per the chosen ordering."""
    if method not in ORDERING_METHODS:
        raise ValueError(f"unknown ordering method {method!r}; use one of {ORDERING_METHODS}")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if session.model is None:
        raise TrainingError(
            f"topic {session.topic.topic_id}: cannot build a run from an untrained session"
        )

    model = session.model
    scores = {
        doc_id: model.score_vector(session.vectors[doc_id])
        for doc_id in session.corpus.doc_ids
    }
    judged = session.judgments
    unjudged = sorted(
        (d for d in session.corpus.doc_ids if d not in judged),
        key=lambda d: (-scores[d], d),
    )

    if method == "ii":
        ordered = sorted(session.corpus.doc_ids, key=lambda d: (-scores[d], d))[:depth]
        emitted = _quantized_chain([scores[d] for d in ordered], prev=math.inf)
    else:
        def block(label: int) -> list[str]:
            members = [d for d, j in judged.items() if j.label == label]
            members.sort(key=lambda d: (judged[d].timestamp, d))
            return members

        judged_seq = block(2) + block(1)
        if method == "iii":
            judged_seq += block(0)
        ordered = (judged_seq + unjudged)[:depth]
        n_judged = min(len(judged_seq), depth)
        base = _sig_round(max(scores.values())) if scores else 0.0
        ladder: list[float] = []
        value = base
        for _ in range(n_judged):
            value = next_higher_score(value)
            ladder.append(value)
        ladder.reverse()
        tail_prev = ladder[-1] if ladder else math.inf
        emitted = ladder + _quantized_chain(
            [scores[d] for d in ordered[n_judged:]], prev=tail_prev
        )

    entries = []
    for position, (doc_id, score) in enumerate(zip(ordered, emitted), start=1):
        if is_synthetic(doc_id):
            raise RunFormatError(f"synthetic document {doc_id!r} reached run output")
        entries.append(RunEntry(session.topic.topic_id, doc_id, position, score, tag))
    return entries


def _quantized_chain(raw_scores: Sequence[float], prev: float) -> list[float]:
    """Grid-round scores, nudging down whenever strict decrease would break."""
    out = []
    for score in raw_scores:
        q = _sig_round(score)
        if q >= prev:
            q = next_lower_score(prev)
        out.append(q)
        prev = q
    return out


def _validate_topic_block(topic_id: int, entries: Sequence[RunEntry]) -> None:
    seen: set[str] = set()
    previous_score = math.inf
    for offset, entry in enumerate(entries):
        where = f"topic {topic_id} rank {offset + 1}"
        if entry.rank != offset + 1:
            raise RunFormatError(f"{where}: ranks must be contiguous from 1, got {entry.rank}")
        if entry.doc_id in seen:
            raise RunFormatError(f"{where}: duplicate doc_id {entry.doc_id!r}")
        seen.add(entry.doc_id)
        if is_synthetic(entry.doc_id):
            raise RunFormatError(f"{where}: synthetic doc_id {entry.doc_id!r} in run")
        if not entry.score < previous_score:
            raise RunFormatError(f"{where}: scores must decrease strictly")
        previous_score = entry.score


def validate_run(entries: Sequence[RunEntry]) -> None:
    by_topic: dict[int, list[RunEntry]] = {}
    for entry in entries:
        by_topic.setdefault(entry.topic_id, []).append(entry)
    for topic_id, block in by_topic.items():
        _validate_topic_block(topic_id, block)


def format_run_lines(entries: Sequence[RunEntry]) -> str:
    """Render entries as `topic Q0 doc rank score tag` lines (%.6g scores)."""
    return "".join(
        f"{e.topic_id} Q0 {e.doc_id} {e.rank} {e.score:.6g} {e.run_tag}\n"
        for e in entries
    )


def write_run_file(entries: Sequence[RunEntry], path: str | Path) -> None:
    """Write a validated run file (UTF-8, LF line endings)."""
    validate_run(entries)
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_run_lines(entries))


def parse_run_file(path: str | Path) -> list[RunEntry]:
    """Inverse of :func:`write_run_file` on well-formed files."""
    entries = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise RunFormatError(
                    f"{path}:{lineno}: expected 6 space-separated fields, got {len(parts)}"
                )
            topic_id, q0, doc_id, rank, score, tag = parts
            if q0 != "Q0":
                raise RunFormatError(f"{path}:{lineno}: second field must be 'Q0'")
            try:
                entries.append(
                    RunEntry(int(topic_id), doc_id, int(rank), float(score), tag)
                )
            except ValueError as exc:
                raise RunFormatError(f"{path}:{lineno}: {exc}") from None
    return entries
