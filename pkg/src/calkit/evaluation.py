"""Ad-hoc retrieval metrics against TREC qrels.

Binary relevance (grade >= 1) feeds MAP, bpref, P@k, R-precision and RBP;
NDCG uses the graded judgment directly with a 1/log2(rank+1) discount and
an ideal ranking by grade. Unjudged documents count as not relevant for
MAP/P@k/NDCG, are skipped entirely by bpref, and accrue to the RBP
residual. Topics are averaged over those present in the qrels (topics
without a single relevant document cannot be scored and are left out).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .errors import SchemaError
from .runs import RunEntry

log = logging.getLogger(__name__)

GRADES = (0, 1, 2)
DEFAULT_P_KS = (5, 10, 15, 20, 30)
DEFAULT_NDCG_KS = (10, 20)


class Qrels:
    """(topic_id, doc_id) -> grade map with per-topic judged sets."""

    def __init__(self, grades: Mapping[tuple[int, str], int], duplicates: int = 0):
        self.grades: dict[tuple[int, str], int] = {}
        self.judged: dict[int, dict[str, int]] = {}
        self.duplicates = duplicates
        for (topic_id, doc_id), grade in grades.items():
            if grade not in GRADES:
                raise ValueError(f"grade must be in {GRADES}, got {grade}")
            self.grades[(topic_id, doc_id)] = grade
            self.judged.setdefault(topic_id, {})[doc_id] = grade

    def topics(self) -> list[int]:
        return sorted(self.judged)

    def grade(self, topic_id: int, doc_id: str) -> int | None:
        return self.grades.get((topic_id, doc_id))

    def relevant_count(self, topic_id: int) -> int:
        return sum(1 for g in self.judged.get(topic_id, {}).values() if g >= 1)

    def nonrelevant_count(self, topic_id: int) -> int:
        return sum(1 for g in self.judged.get(topic_id, {}).values() if g == 0)


def parse_qrels(path: str | Path) -> Qrels:
    """Parse `topic iteration doc grade` lines; duplicate pairs keep the
    last grade and are counted on the returned object."""
    grades: dict[tuple[int, str], int] = {}
    duplicates = 0
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise SchemaError(
                    f"{path}:{lineno}: expected 4 fields `topic iteration doc grade`"
                )
            topic_raw, _iteration, doc_id, grade_raw = parts
            try:
                topic_id = int(topic_raw)
                grade = int(grade_raw)
            except ValueError:
                raise SchemaError(f"{path}:{lineno}: topic and grade must be integers") from None
            if grade not in GRADES:
                raise SchemaError(f"{path}:{lineno}: grade must be in {GRADES}, got {grade}")
            if (topic_id, doc_id) in grades:
                duplicates += 1
            grades[(topic_id, doc_id)] = grade
    if duplicates:
        log.warning("%s: %d duplicate (topic, doc) pairs; last grade wins", path, duplicates)
    return Qrels(grades, duplicates=duplicates)


@dataclass
class MetricsReport:
    """Per-topic metric values plus means over the evaluated topics."""

    per_topic: dict[int, dict[str, float]]
    means: dict[str, float]
    rbp_p: float
    skipped_topics: list[int] = field(default_factory=list)

    def metric_names(self) -> list[str]:
        return list(self.means)

    def to_text(self) -> str:
        topics = sorted(self.per_topic)
        width = max((len(name) for name in self.means), default=6) + 2
        header = "metric".ljust(width) + "    mean" + "".join(
            f"  {('t' + str(t)):>8}" for t in topics
        )
        lines = [header]
        for name in self.means:
            row = name.ljust(width) + f"  {self.means[name]:6.4f}"
            for topic_id in topics:
                row += f"  {self.per_topic[topic_id][name]:8.4f}"
            lines.append(row)
        return "\n".join(lines)

    def to_csv_rows(self) -> list[tuple[str, str, float]]:
        rows: list[tuple[str, str, float]] = []
        for name, value in self.means.items():
            rows.append((name, "all", value))
        for topic_id in sorted(self.per_topic):
            for name, value in self.per_topic[topic_id].items():
                rows.append((name, str(topic_id), value))
        return rows


def _topic_metrics(
    ranking: Sequence[str],
    judged: Mapping[str, int],
    rbp_p: float,
    ndcg_ks: Sequence[int],
    p_ks: Sequence[int],
) -> dict[str, float]:
    relevant = {doc for doc, grade in judged.items() if grade >= 1}
    R = len(relevant)
    N = len(judged) - R

    hits = 0
    ap_sum = 0.0
    bpref_sum = 0.0
    nonrel_above = 0
    rbp = 0.0
    rbp_unjudged = 0.0
    dcg = {k: 0.0 for k in ndcg_ks}
    prec_hits = {}
    r_prec_hits = 0

    for position, doc_id in enumerate(ranking, start=1):
        rel = doc_id in relevant
        if rel:
            hits += 1
            ap_sum += hits / position
            if position <= R:
                r_prec_hits += 1
            if nonrel_above == 0:
                bpref_sum += 1.0
            else:
                bpref_sum += 1.0 - min(nonrel_above, R) / min(R, N)
        elif doc_id in judged:
            nonrel_above += 1
        else:
            rbp_unjudged += rbp_p ** (position - 1)
        if rel:
            rbp += rbp_p ** (position - 1)
        grade = judged.get(doc_id, 0)
        if grade:
            for k in ndcg_ks:
                if position <= k:
                    dcg[k] += grade / math.log2(position + 1)
        for k in p_ks:
            if position == k:
                prec_hits[k] = hits

    out = {"map": ap_sum / R}
    out["bpref"] = bpref_sum / R
    ideal_grades = sorted(judged.values(), reverse=True)
    for k in ndcg_ks:
        idcg = sum(
            grade / math.log2(i + 2) for i, grade in enumerate(ideal_grades[:k]) if grade
        )
        out[f"ndcg@{k}"] = dcg[k] / idcg if idcg > 0 else 0.0
    for k in p_ks:
        out[f"p@{k}"] = prec_hits.get(k, hits) / k
    out["r_prec"] = r_prec_hits / R
    out["rbp"] = (1.0 - rbp_p) * rbp
    out["rbp_residual"] = (1.0 - rbp_p) * rbp_unjudged + rbp_p ** len(ranking)
    return out


def evaluate(
    run: Sequence[RunEntry],
    qrels: Qrels,
    rbp_p: float = 0.5,
    ndcg_ks: Sequence[int] = DEFAULT_NDCG_KS,
    p_ks: Sequence[int] = DEFAULT_P_KS,
) -> MetricsReport:
    """Score a run against qrels, averaging over evaluable qrels topics."""
    if not 0.0 < rbp_p < 1.0:
        raise ValueError(f"rbp_p must be in (0, 1), got {rbp_p}")

    by_topic: dict[int, list[RunEntry]] = {}
    skipped: list[int] = []
    for entry in run:
        if entry.topic_id not in qrels.judged:
            if entry.topic_id not in skipped:
                skipped.append(entry.topic_id)
            continue
        by_topic.setdefault(entry.topic_id, []).append(entry)
    for topic_id in skipped:
        log.warning("run topic %s absent from qrels; skipped", topic_id)

    per_topic: dict[int, dict[str, float]] = {}
    for topic_id in qrels.topics():
        if qrels.relevant_count(topic_id) == 0:
            log.warning("qrels topic %s has no relevant documents; not scored", topic_id)
            continue
        entries = sorted(by_topic.get(topic_id, []), key=lambda e: e.rank)
        ranking = [e.doc_id for e in entries]
        per_topic[topic_id] = _topic_metrics(
            ranking, qrels.judged[topic_id], rbp_p, ndcg_ks, p_ks
        )

    names = (
        ["map", "bpref"]
        + [f"ndcg@{k}" for k in ndcg_ks]
        + [f"p@{k}" for k in p_ks]
        + ["r_prec", "rbp", "rbp_residual"]
    )
    count = len(per_topic)
    means = {
        name: (sum(values[name] for values in per_topic.values()) / count if count else 0.0)
        for name in names
    }
    return MetricsReport(per_topic=per_topic, means=means, rbp_p=rbp_p, skipped_topics=skipped)
