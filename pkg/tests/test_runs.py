import numpy as np
import pytest

from calkit.corpus import Corpus, DocumentRecord, Topic
from calkit.errors import RunFormatError, TrainingError
from calkit.learner import SgdLogisticRanker
from calkit.runs import (
    RunEntry,
    build_run,
    format_run_lines,
    next_higher_score,
    next_lower_score,
    parse_run_file,
    validate_run,
    write_run_file,
)
from calkit.session import Judgment, build_sessions

TERMS = ["alpha", "bravo", "charlie", "delta", "echo"]


def five_doc_session(scores, judgments=()):
    """Session over d1..d5 (one distinct term each) with planted scores."""
    corpus = Corpus(
        [DocumentRecord(f"d{i+1}", title=term) for i, term in enumerate(TERMS)]
    )
    topic = Topic(1, "alpha question")
    _, sessions = build_sessions(corpus, [topic])
    session = sessions[1]
    model = SgdLogisticRanker()
    model.n_features_ = len(session.vocabulary)
    model.weights_ = np.zeros(len(session.vocabulary))
    for doc_id, score in scores.items():
        term = TERMS[int(doc_id[1]) - 1]
        # single-term docs vectorize to weight exactly 1.0 on that term
        model.weights_[session.vocabulary.term_to_id[term]] = score
    session.model = model
    for timestamp, (doc_id, label) in enumerate(judgments, start=1):
        session.apply_judgment(Judgment(1, doc_id, label, "t", float(timestamp)))
    return session


SCORES = {"d1": 0.5, "d2": 0.3, "d3": 0.9, "d4": 0.1, "d5": 0.95}
JUDGED = (("d1", 2), ("d2", 1), ("d5", 0))


class TestOrderings:
    def test_method_i_leads_with_relevant_drops_label0(self):
        session = five_doc_session(SCORES, JUDGED)
        run = build_run(session, "i")
        assert [e.doc_id for e in run] == ["d1", "d2", "d3", "d4"]

    def test_method_iii_keeps_label0_before_unjudged(self):
        session = five_doc_session(SCORES, JUDGED)
        run = build_run(session, "iii")
        assert [e.doc_id for e in run] == ["d1", "d2", "d5", "d3", "d4"]

    def test_method_ii_pure_model_order(self):
        session = five_doc_session(SCORES, JUDGED)
        run = build_run(session, "ii")
        assert [e.doc_id for e in run] == ["d5", "d3", "d1", "d2", "d4"]

    def test_judged_blocks_ordered_by_timestamp(self):
        session = five_doc_session(SCORES, (("d2", 2), ("d1", 2)))
        run = build_run(session, "i")
        assert [e.doc_id for e in run][:2] == ["d2", "d1"]

    def test_judged_scores_sit_above_model_scores(self):
        session = five_doc_session(SCORES, JUDGED)
        run = build_run(session, "iii")
        judged_scores = [e.score for e in run[:3]]
        assert min(judged_scores) > 0.95
        assert all(a > b for a, b in zip(judged_scores, judged_scores[1:]))

    def test_scores_strictly_decreasing_even_with_ties(self):
        session = five_doc_session({d: 0.5 for d in SCORES})
        run = build_run(session, "ii")
        scores = [e.score for e in run]
        assert all(a > b for a, b in zip(scores, scores[1:]))

    def test_depth_truncation(self):
        session = five_doc_session(SCORES, JUDGED)
        assert len(build_run(session, "iii", depth=2)) == 2
        assert len(build_run(session, "iii", depth=50)) == 5

    def test_untrained_session_rejected(self):
        session = five_doc_session(SCORES)
        session.model = None
        with pytest.raises(TrainingError):
            build_run(session, "i")

    def test_unknown_method_rejected(self):
        session = five_doc_session(SCORES)
        with pytest.raises(ValueError, match="method"):
            build_run(session, "iv")

    def test_method_iii_is_method_i_with_label0_spliced(self):
        session = five_doc_session(SCORES, JUDGED)
        run_i = [e.doc_id for e in build_run(session, "i")]
        run_iii = [e.doc_id for e in build_run(session, "iii")]
        label0 = [d for d, j in session.judgments.items() if j.label == 0]
        assert [d for d in run_iii if d not in label0] == run_i


class TestScoreGrid:
    @pytest.mark.parametrize("x", [0.95, 1.0, 0.999999, -0.5, 0.0, 123.456, 1e-7])
    def test_neighbors_are_strict_and_printable(self, x):
        lower, higher = next_lower_score(x), next_higher_score(x)
        assert lower < x < higher
        for v in (lower, higher):
            assert float(f"{v:.6g}") == v

    def test_chain_of_one_thousand_distinct_values(self):
        value = 0.5
        seen = {value}
        for _ in range(1000):
            value = next_lower_score(value)
            assert value not in seen
            seen.add(value)


class TestRunFile:
    def test_single_entry_format(self, tmp_path):
        path = tmp_path / "run.txt"
        write_run_file([RunEntry(1, "d1", 1, 2.5, "tagA")], path)
        assert path.read_text() == "1 Q0 d1 1 2.5 tagA\n"

    def test_round_trip_thousand_entries(self, tmp_path):
        entries = []
        score = 1000.0
        for rank in range(1, 1001):
            score = next_lower_score(score)
            entries.append(RunEntry(3, f"doc{rank:04d}", rank, score, "t"))
        path = tmp_path / "run.txt"
        write_run_file(entries, path)
        assert parse_run_file(path) == entries

    def test_five_field_line_is_parse_error(self, tmp_path):
        path = tmp_path / "run.txt"
        path.write_text("1 Q0 d1 1 2.5\n")
        with pytest.raises(RunFormatError, match="run.txt:1"):
            parse_run_file(path)

    def test_bad_rank_reports_line(self, tmp_path):
        path = tmp_path / "run.txt"
        path.write_text("1 Q0 d1 1 2.5 t\n1 Q0 d2 x 2.4 t\n")
        with pytest.raises(RunFormatError, match=":2"):
            parse_run_file(path)

    def test_q0_required(self, tmp_path):
        path = tmp_path / "run.txt"
        path.write_text("1 QX d1 1 2.5 t\n")
        with pytest.raises(RunFormatError, match="Q0"):
            parse_run_file(path)

    def test_write_validates_invariants(self, tmp_path):
        path = tmp_path / "run.txt"
        with pytest.raises(RunFormatError, match="contiguous"):
            write_run_file([RunEntry(1, "d1", 2, 1.0, "t")], path)
        with pytest.raises(RunFormatError, match="strictly"):
            write_run_file(
                [RunEntry(1, "d1", 1, 1.0, "t"), RunEntry(1, "d2", 2, 1.0, "t")], path
            )
        with pytest.raises(RunFormatError, match="duplicate"):
            write_run_file(
                [RunEntry(1, "d1", 1, 1.0, "t"), RunEntry(1, "d1", 2, 0.5, "t")], path
            )
        with pytest.raises(RunFormatError, match="synthetic"):
            write_run_file([RunEntry(1, "synthetic-1", 1, 1.0, "t")], path)

    def test_built_runs_validate_and_round_trip(self, tmp_path):
        session = five_doc_session(SCORES, JUDGED)
        for method in ("i", "ii", "iii"):
            entries = build_run(session, method, tag=f"m{method}")
            validate_run(entries)
            path = tmp_path / f"run-{method}.txt"
            write_run_file(entries, path)
            assert parse_run_file(path) == entries

    def test_format_lines_matches_file(self, tmp_path):
        entries = [RunEntry(1, "d1", 1, 2.5, "t"), RunEntry(1, "d2", 2, 1.5, "t")]
        path = tmp_path / "run.txt"
        write_run_file(entries, path)
        assert format_run_lines(entries) == path.read_text()
