"""HTTP service exposing the review loop to human assessors.

Documents are handed out under short exclusive leases so concurrent
assessors never see the same document twice; judgments are appended to
the durable journal before they are acknowledged; all mutations of one
topic's session run under a per-topic lock, so counters admit no lost
updates. Stopping is advisory: the service reports ``stop_recommended``
but keeps serving documents. Retraining happens after each completed
batch of the session's growth schedule.
"""

from __future__ import annotations

import configparser
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from fastapi import FastAPI, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .errors import LeaseConflictError, TrainingError, UnknownTopicError
from .features import TfidfVectorizer
from .journal import JudgmentJournal
from .learner import LearnerConfig
from .runs import ORDERING_METHODS, build_run, format_run_lines
from .session import Judgment, ReviewSession, StoppingConfig, build_sessions
from .storage import DataDir, load_workspace

log = logging.getLogger(__name__)

DEFAULT_LEASE_TTL = 600.0
HIGHLIGHT_COUNT = 5


@dataclass(frozen=True)
class Lease:
    topic_id: int
    doc_id: str
    assessor_id: str
    expires_at: float


@dataclass
class ServiceConfig:
    """Service settings from an INI-style file plus environment overrides."""

    data_dir: Path = Path("data")
    host: str = "127.0.0.1"
    port: int = 8000
    lease_ttl: float = DEFAULT_LEASE_TTL
    ui_dir: Path | None = None
    mode: str = "cal"
    budget: int | None = None
    seed: int = 0
    learner: LearnerConfig = LearnerConfig()
    stopping: StoppingConfig = StoppingConfig()


def load_service_config(
    path: str | Path | None = None,
    env: dict[str, str] | None = None,
) -> ServiceConfig:
    """Read the config file (if any), then apply CALKIT_* env overrides."""
    env = os.environ if env is None else env
    parser = configparser.ConfigParser()
    if path is not None:
        with Path(path).open(encoding="utf-8") as fh:
            parser.read_file(fh)

    def setting(section: str, option: str, env_key: str) -> str | None:
        if env_key in env:
            return env[env_key]
        if parser.has_option(section, option):
            return parser.get(section, option)
        return None

    cfg = ServiceConfig()
    raw = setting
    data_dir = raw("service", "data_dir", "CALKIT_DATA_DIR")
    if data_dir:
        cfg.data_dir = Path(data_dir)
    host = raw("service", "host", "CALKIT_HOST")
    if host:
        cfg.host = host
    port = raw("service", "port", "CALKIT_PORT")
    if port:
        cfg.port = int(port)
    ttl = raw("service", "lease_ttl", "CALKIT_LEASE_TTL")
    if ttl:
        cfg.lease_ttl = float(ttl)
    ui_dir = raw("service", "ui_dir", "CALKIT_UI_DIR")
    if ui_dir:
        cfg.ui_dir = Path(ui_dir)
    mode = raw("session", "mode", "CALKIT_MODE")
    if mode:
        cfg.mode = mode
    budget = raw("session", "budget", "CALKIT_BUDGET")
    if budget:
        cfg.budget = int(budget)
    seed = raw("session", "seed", "CALKIT_SEED")
    if seed:
        cfg.seed = int(seed)
    cfg.learner = LearnerConfig(
        lambda_=float(raw("learner", "lambda", "CALKIT_LAMBDA") or cfg.learner.lambda_),
        loop_type=raw("learner", "loop_type", "CALKIT_LOOP_TYPE") or cfg.learner.loop_type,
        iterations=int(raw("learner", "iterations", "CALKIT_ITERATIONS") or cfg.learner.iterations),
        seed=int(raw("learner", "seed", "CALKIT_LEARNER_SEED") or cfg.learner.seed),
    )
    cfg.stopping = StoppingConfig(
        a=float(raw("stopping", "a", "CALKIT_STOP_A") or cfg.stopping.a),
        b=float(raw("stopping", "b", "CALKIT_STOP_B") or cfg.stopping.b),
    )
    return cfg


class AssessorService:
    """Serialized front door to the per-topic review sessions."""

    def __init__(
        self,
        sessions: dict[int, ReviewSession],
        journal: JudgmentJournal,
        lease_ttl: float = DEFAULT_LEASE_TTL,
        clock: Callable[[], float] = time.time,
    ):
        self.sessions = sessions
        self.journal = journal
        self.lease_ttl = lease_ttl
        self.clock = clock
        self._locks = {topic_id: threading.Lock() for topic_id in sessions}
        self._leases: dict[int, dict[str, Lease]] = {t: {} for t in sessions}
        self._since_retrain: dict[int, int] = {t: 0 for t in sessions}
        self._replay()

    def _replay(self) -> None:
        count = 0
        for judgment in self.journal.replay():
            session = self.sessions.get(judgment.topic_id)
            if session is None:
                log.warning(
                    "journal entry for unknown topic %s ignored", judgment.topic_id
                )
                continue
            session.apply_judgment(judgment)
            count += 1
        if count:
            for topic_id, session in self.sessions.items():
                self._since_retrain[topic_id] = session.rebuild_schedule()
            log.info("replayed %d journaled judgments", count)

    def _session(self, topic_id: int) -> ReviewSession:
        session = self.sessions.get(topic_id)
        if session is None:
            raise UnknownTopicError(f"no session for topic {topic_id}")
        return session

    def _purge_leases(self, topic_id: int) -> None:
        now = self.clock()
        leases = self._leases[topic_id]
        session = self.sessions[topic_id]
        for doc_id in [d for d, lease in leases.items() if lease.expires_at <= now]:
            del leases[doc_id]
            session.release_pending(doc_id)

    def _counters(self, session: ReviewSession) -> dict[str, Any]:
        return {
            "m": session.m,
            "n": session.n,
            "assessed_count": session.assessed_count,
            "budget_remaining": session.budget_remaining,
            "stop_recommended": session.should_stop(),
        }

    def topics_summary(self) -> list[dict[str, Any]]:
        out = []
        for topic_id in sorted(self.sessions):
            session = self.sessions[topic_id]
            with self._locks[topic_id]:
                summary = {"topic_id": topic_id, "query": session.topic.query}
                summary.update(self._counters(session))
                out.append(summary)
        return out

    def next_document(self, topic_id: int, assessor_id: str) -> dict[str, Any] | None:
        """Lease and return the top-ranked unjudged, unleased document."""
        session = self._session(topic_id)
        with self._locks[topic_id]:
            self._purge_leases(topic_id)
            if session.model is None:
                session.refresh_model()
            docs = session.next_documents(1)
            if not docs:
                return None
            doc_id = docs[0]
            self._leases[topic_id][doc_id] = Lease(
                topic_id, doc_id, assessor_id, self.clock() + self.lease_ttl
            )
            record = session.corpus.get(doc_id)
            payload = {
                "doc_id": doc_id,
                "title": record.title,
                "abstract": record.abstract,
                "authors": record.authors,
                "year": record.year,
                "publisher": record.publisher,
                "highlight_terms": session.model.top_terms(
                    session.vectors[doc_id], session.vocabulary, HIGHLIGHT_COUNT
                ),
            }
            payload.update(self._counters(session))
            return payload

    def submit_judgment(
        self,
        topic_id: int,
        doc_id: str,
        assessor_id: str,
        label: int,
    ) -> dict[str, Any]:
        """Durably record one judgment and return the updated counters."""
        session = self._session(topic_id)
        with self._locks[topic_id]:
            self._purge_leases(topic_id)
            judgment = Judgment(
                topic_id=topic_id,
                doc_id=doc_id,
                label=label,
                assessor_id=assessor_id,
                timestamp=session.next_timestamp(),
            )
            first_time = doc_id not in session.judgments
            if first_time:
                lease = self._leases[topic_id].get(doc_id)
                if lease is None:
                    raise LeaseConflictError(
                        f"doc {doc_id!r} is not leased to {assessor_id!r}; "
                        "request it via /next first"
                    )
                if lease.assessor_id != assessor_id:
                    raise LeaseConflictError(
                        f"doc {doc_id!r} is leased to another assessor"
                    )
            session.validate_judgment(judgment)
            self.journal.append(judgment)
            session.record_judgment(judgment)
            self._leases[topic_id].pop(doc_id, None)

            retrained = False
            if first_time:
                self._since_retrain[topic_id] += 1
                if self._since_retrain[topic_id] >= session.batch_size:
                    session.refresh_model()
                    session.advance_batch()
                    self._since_retrain[topic_id] = 0
                    retrained = True

            ack = {"doc_id": doc_id, "label": label, "retrained": retrained}
            ack.update(self._counters(session))
            return ack

    def status(self, topic_id: int) -> dict[str, Any]:
        session = self._session(topic_id)
        with self._locks[topic_id]:
            by_assessor: dict[str, int] = {}
            for judgment in session.judgments.values():
                by_assessor[judgment.assessor_id] = by_assessor.get(judgment.assessor_id, 0) + 1
            summary = {
                "topic_id": topic_id,
                "mode": session.mode,
                "batch_index": session.batch_index,
                "batch_size": session.batch_size,
                "budget": session.budget,
                "assessments_by_assessor": by_assessor,
            }
            summary.update(self._counters(session))
            return summary

    def run_text(self, topic_id: int, method: str) -> str:
        session = self._session(topic_id)
        with self._locks[topic_id]:
            entries = build_run(session, method, tag=f"calkit-{method}")
            return format_run_lines(entries)


def service_from_config(config: ServiceConfig) -> AssessorService:
    """Load the ingested workspace and stand up a service over it."""
    data_dir = DataDir(Path(config.data_dir))
    corpus, vocabulary, topics = load_workspace(data_dir)
    vectorizer = TfidfVectorizer()
    vectorizer.vocabulary_ = vocabulary
    _, sessions = build_sessions(
        corpus,
        topics,
        mode=config.mode,
        learner_config=config.learner,
        stopping=config.stopping,
        budget=config.budget,
        seed=config.seed,
        vectorizer=vectorizer,
    )
    journal = JudgmentJournal(data_dir.journal_path)
    return AssessorService(sessions, journal, lease_ttl=config.lease_ttl)


class JudgmentIn(BaseModel):
    doc_id: str
    assessor_id: str
    label: int


def create_app(service: AssessorService, ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="calkit assessor service")

    @app.exception_handler(UnknownTopicError)
    def _unknown_topic(request, exc):  # noqa: ANN001
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(LeaseConflictError)
    def _lease_conflict(request, exc):  # noqa: ANN001
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(TrainingError)
    def _training_error(request, exc):  # noqa: ANN001
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(KeyError)
    def _key_error(request, exc):  # noqa: ANN001
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    def _value_error(request, exc):  # noqa: ANN001
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/topics")
    def topics():
        return service.topics_summary()

    @app.get("/topics/{topic_id}/next")
    def next_document(topic_id: int, assessor: str):
        payload = service.next_document(topic_id, assessor)
        if payload is None:
            return Response(status_code=204)
        return payload

    @app.post("/topics/{topic_id}/judgments")
    def judge(topic_id: int, body: JudgmentIn):
        return service.submit_judgment(
            topic_id, body.doc_id, body.assessor_id, body.label
        )

    @app.get("/topics/{topic_id}/status")
    def status(topic_id: int):
        return service.status(topic_id)

    @app.get("/topics/{topic_id}/run")
    def run(topic_id: int, method: str):
        if method not in ORDERING_METHODS:
            return JSONResponse(
                status_code=400,
                content={"detail": f"method must be one of {ORDERING_METHODS}"},
            )
        return PlainTextResponse(service.run_text(topic_id, method))

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
